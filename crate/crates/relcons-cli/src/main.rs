//! relcons: score contrast-set predictions, compute relative consistency for
//! count or percentage inputs, emit plotting grids, compare models with exact
//! ordering, cross-check the math against brute force, and recompute
//! published results.
//!
//! Exit codes: 0 success, 1 usage errors, 2 data/format errors,
//! 3 verification failure. Diagnostics go to stderr; a failing run writes
//! nothing to stdout (a completed verification report with failed checks is
//! still printed, with exit 3).

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, IsTerminal};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use relcons::consistency::{self, BundleSpec, EvalResult, ScorePoint};
use relcons::exact::MassRatio;
use relcons::ingest::{self, IngestOptions, StratumCounts};
use relcons::oracle;
use relcons::report::{self, GridMetric, ProportionInput, Rounding};

/// Largest bundle count served exactly; beyond this the tool refuses rather
/// than silently fall back to lossy floating-point combinatorics.
const MAX_BUNDLES: u64 = 100_000;

#[derive(Parser)]
#[command(
    name = "relcons",
    version,
    about = "Contrast-set consistency and relative consistency, computed exactly"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a JSONL prediction file per bundle-size stratum
    Score(ScoreArgs),
    /// Relative consistency for one model, from counts or percentages
    Rc(RcArgs),
    /// Emit a long-form CSV grid (a,c,value) of a metric over all scores
    Grid(GridArgs),
    /// Compare two models with exact ordering of their relative consistencies
    Compare(CompareArgs),
    /// Cross-check closed-form counts against enumeration and seeded sampling
    Verify(VerifyArgs),
    /// Recompute published relative-consistency results next to the reported values
    Replicate(ReplicateArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// JSONL prediction file, or "-" for stdin
    input: String,
    /// Compare gold and prediction strings case-insensitively
    #[arg(long)]
    fold_case: bool,
    /// Emit machine-readable JSON instead of the table
    #[arg(long)]
    json: bool,
    /// Write to a file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RcArgs {
    /// Number of bundles
    #[arg(long)]
    n: u64,
    /// Instances per bundle
    #[arg(long, default_value_t = 2)]
    b: u64,
    /// Correct-instance count (with --c)
    #[arg(long, requires = "c", conflicts_with_all = ["acc", "cons"])]
    a: Option<u64>,
    /// Consistent-bundle count (with --a)
    #[arg(long, requires = "a")]
    c: Option<u64>,
    /// Accuracy percentage (with --cons)
    #[arg(long, requires = "cons")]
    acc: Option<f64>,
    /// Consistency percentage (with --acc)
    #[arg(long, requires = "acc")]
    cons: Option<f64>,
    /// Percent-to-count convention: floor, half-up, or half-even
    #[arg(long, default_value = "floor", value_parser = parse_rounding)]
    rounding: Rounding,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Number of bundles
    #[arg(long)]
    n: u64,
    /// Instances per bundle
    #[arg(long, default_value_t = 2)]
    b: u64,
    /// One of: probability, log10-probability, rel-consistency, scaled,
    /// partial-correct, scaled-delta, partial-correct-delta
    #[arg(long)]
    metric: String,
    /// Write the CSV to a file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Bundles for the first model (count mode)
    #[arg(long, requires_all = ["a1", "c1", "n2", "a2", "c2"], conflicts_with_all = ["file1", "file2"])]
    n1: Option<u64>,
    /// Instances per bundle for the first model
    #[arg(long, default_value_t = 2)]
    b1: u64,
    /// Correct instances for the first model
    #[arg(long)]
    a1: Option<u64>,
    /// Consistent bundles for the first model
    #[arg(long)]
    c1: Option<u64>,
    /// Bundles for the second model
    #[arg(long)]
    n2: Option<u64>,
    /// Instances per bundle for the second model
    #[arg(long, default_value_t = 2)]
    b2: u64,
    /// Correct instances for the second model
    #[arg(long)]
    a2: Option<u64>,
    /// Consistent bundles for the second model
    #[arg(long)]
    c2: Option<u64>,
    /// JSONL predictions for the first model (file mode)
    #[arg(long, requires = "file2")]
    file1: Option<String>,
    /// JSONL predictions for the second model
    #[arg(long, requires = "file1")]
    file2: Option<String>,
    /// Compare gold and prediction strings case-insensitively (file mode)
    #[arg(long)]
    fold_case: bool,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Enumerate every spec with at most this many instances (hard cap 24)
    #[arg(long, default_value_t = 16)]
    max_instances: u64,
    /// Draws for the sampled check
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Seed for the sampled check
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
}

#[derive(Args)]
struct ReplicateArgs {
    /// Percent-to-count convention: floor, half-up, or half-even
    #[arg(long, default_value = "floor", value_parser = parse_rounding)]
    rounding: Rounding,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

fn parse_rounding(text: &str) -> Result<Rounding, String> {
    text.parse()
}

enum CliError {
    Usage(String),
    Data(String),
    /// The verification report, printed in full before exiting with code 3.
    VerificationFailed { report: String },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::VerificationFailed { .. } => 3,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            match &err {
                CliError::Usage(message) => eprintln!("error: {message}"),
                CliError::Data(message) => eprintln!("error: {message}"),
                CliError::VerificationFailed { report } => {
                    print!("{report}");
                    eprintln!("error: verification failed");
                }
            }
            std::process::exit(err.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Score(args) => {
            let payload = score_command(&args)?;
            deliver(payload, args.output.as_deref())
        }
        Command::Rc(args) => {
            let payload = rc_command(&args)?;
            deliver(payload, None)
        }
        Command::Grid(args) => {
            let payload = grid_command(&args)?;
            deliver(payload, args.output.as_deref())
        }
        Command::Compare(args) => {
            let payload = compare_command(&args)?;
            deliver(payload, None)
        }
        Command::Verify(args) => {
            let payload = verify_command(&args)?;
            deliver(payload, None)
        }
        Command::Replicate(args) => {
            let payload = replicate_command(&args)?;
            deliver(payload, None)
        }
    }
}

/// Write the fully generated payload at the very end, so failed runs never
/// leave partial output behind.
fn deliver(payload: String, output: Option<&std::path::Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, payload)
            .map_err(|err| CliError::Data(format!("cannot write {}: {err}", path.display()))),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn spec_from_flags(n: u64, b: u64) -> Result<BundleSpec, CliError> {
    if n > MAX_BUNDLES {
        return Err(CliError::Usage(format!(
            "{n} bundles exceeds the {MAX_BUNDLES}-bundle exact-arithmetic limit; \
             refusing to degrade to floating point"
        )));
    }
    BundleSpec::new(n, b).map_err(|err| CliError::Usage(err.to_string()))
}

fn proportion(value: f64) -> String {
    format!("{value:.4}")
}

fn percent(value: f64) -> String {
    format!("{:.1}%", value * 100.0)
}

fn signed(value: f64) -> String {
    if value >= 0.0 {
        format!("+{value:.4}")
    } else {
        format!("{value:.4}")
    }
}

fn eval_json(eval: &EvalResult) -> serde_json::Value {
    json!({
        "bundles": eval.spec.bundles(),
        "bundle_size": eval.spec.bundle_size(),
        "correct": eval.point.correct,
        "consistent": eval.point.consistent,
        "accuracy": eval.accuracy,
        "consistency": eval.consistency,
        "rel_consistency": eval.rel_consistency,
        "rel_consistency_pct": eval.rel_consistency * 100.0,
        "scaled_score": eval.scaled_score,
        "partial_correct_score": eval.partial_correct_score,
    })
}

fn eval_lines(out: &mut String, eval: &EvalResult, indent: &str) {
    let _ = writeln!(
        out,
        "{indent}accuracy          {}  ({})",
        proportion(eval.accuracy),
        percent(eval.accuracy)
    );
    let _ = writeln!(
        out,
        "{indent}consistency       {}  ({})",
        proportion(eval.consistency),
        percent(eval.consistency)
    );
    let _ = writeln!(
        out,
        "{indent}rel-consistency   {}  ({})",
        proportion(eval.rel_consistency),
        percent(eval.rel_consistency)
    );
    let _ = writeln!(
        out,
        "{indent}scaled-score      {}",
        proportion(eval.scaled_score)
    );
    if let Some(partial) = eval.partial_correct_score {
        let _ = writeln!(out, "{indent}partial-correct   {}", proportion(partial));
    }
}

// --- rc ---------------------------------------------------------------

fn rc_command(args: &RcArgs) -> Result<String, CliError> {
    let spec = spec_from_flags(args.n, args.b)?;
    let (eval, clamped_from) = match (args.a, args.c, args.acc, args.cons) {
        (Some(correct), Some(consistent), None, None) => {
            let eval = consistency::evaluate(spec, ScorePoint::new(correct, consistent))
                .map_err(|err| CliError::Usage(err.to_string()))?;
            (eval, None)
        }
        (None, None, Some(acc), Some(cons)) => {
            let input = ProportionInput::new(args.n, args.b, acc, cons)
                .map_err(|err| CliError::Usage(err.to_string()))?;
            let out = report::rc_for_proportions(&input, args.rounding)
                .map_err(|err| CliError::Usage(err.to_string()))?;
            (out.eval, out.clamped_from)
        }
        _ => {
            return Err(CliError::Usage(
                "provide either --a and --c (counts) or --acc and --cons (percentages)".into(),
            ))
        }
    };
    if let Some(raw) = clamped_from {
        eprintln!(
            "warning: rounded consistency count {raw} is outside the achievable range; \
             clamped to {}",
            eval.point.consistent
        );
    }
    if args.json {
        let mut value = eval_json(&eval);
        value["rounding"] = json!(args.rounding.to_string());
        return Ok(format!("{}\n", serde_json::to_string(&value).expect("valid json")));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n={} b={} a={} c={}",
        eval.spec.bundles(),
        eval.spec.bundle_size(),
        eval.point.correct,
        eval.point.consistent
    );
    eval_lines(&mut out, &eval, "");
    Ok(out)
}

// --- score ------------------------------------------------------------

fn read_bundles(path: &str, fold_case: bool) -> Result<Vec<StratumCounts>, CliError> {
    let options = IngestOptions { fold_case };
    let set = if path == "-" {
        ingest::load_predictions(std::io::stdin().lock(), options)
    } else {
        let file =
            File::open(path).map_err(|err| CliError::Data(format!("cannot open {path}: {err}")))?;
        ingest::load_predictions(BufReader::new(file), options)
    }
    .map_err(|err| CliError::Data(err.to_string()))?;
    Ok(ingest::score_bundles(&set))
}

fn stratum_eval(stratum: &StratumCounts) -> Result<EvalResult, CliError> {
    if stratum.bundles > MAX_BUNDLES {
        return Err(CliError::Data(format!(
            "stratum b={} has {} bundles, over the {MAX_BUNDLES}-bundle exact-arithmetic limit",
            stratum.bundle_size, stratum.bundles
        )));
    }
    let spec = stratum.spec().map_err(|err| CliError::Data(err.to_string()))?;
    consistency::evaluate(spec, stratum.point()).map_err(|err| CliError::Data(err.to_string()))
}

fn score_command(args: &ScoreArgs) -> Result<String, CliError> {
    let strata = read_bundles(&args.input, args.fold_case)?;
    let singletons: u64 = strata
        .iter()
        .filter(|stratum| stratum.is_singleton())
        .map(|stratum| stratum.bundles)
        .sum();
    if singletons > 0 {
        eprintln!(
            "warning: {singletons} singleton bundle(s) scored for accuracy only \
             and excluded from consistency"
        );
    }
    if args.json {
        let mut rows = Vec::new();
        for stratum in &strata {
            let mut row = json!({
                "bundle_size": stratum.bundle_size,
                "bundles": stratum.bundles,
                "correct": stratum.correct,
                "consistent": stratum.consistent,
                "singleton": stratum.is_singleton(),
            });
            if stratum.is_singleton() {
                row["accuracy"] = json!(stratum.correct as f64 / stratum.bundles as f64);
            } else {
                let eval = stratum_eval(stratum)?;
                for (key, value) in eval_json(&eval)
                    .as_object()
                    .expect("eval json is an object")
                {
                    row[key] = value.clone();
                }
            }
            rows.push(row);
        }
        let value = json!({ "strata": rows });
        return Ok(format!("{}\n", serde_json::to_string(&value).expect("valid json")));
    }
    let mut out = String::new();
    for stratum in &strata {
        if stratum.is_singleton() {
            let accuracy = stratum.correct as f64 / stratum.bundles as f64;
            let _ = writeln!(
                out,
                "stratum b=1: {} singleton bundle(s), accuracy only",
                stratum.bundles
            );
            let _ = writeln!(
                out,
                "  accuracy          {}  ({})",
                proportion(accuracy),
                percent(accuracy)
            );
            continue;
        }
        let eval = stratum_eval(stratum)?;
        let _ = writeln!(
            out,
            "stratum b={}: {} bundles, a={}/{} c={}/{}",
            stratum.bundle_size,
            stratum.bundles,
            stratum.correct,
            eval.spec.instances(),
            stratum.consistent,
            stratum.bundles
        );
        eval_lines(&mut out, &eval, "  ");
    }
    Ok(out)
}

// --- grid -------------------------------------------------------------

fn grid_command(args: &GridArgs) -> Result<String, CliError> {
    let spec = spec_from_flags(args.n, args.b)?;
    let metric: GridMetric = args
        .metric
        .parse()
        .map_err(|err: report::ReportError| CliError::Usage(err.to_string()))?;
    let mut out = Vec::new();
    report::write_grid_csv(spec, metric, &mut out)
        .map_err(|err| CliError::Usage(err.to_string()))?;
    Ok(String::from_utf8(out).expect("CSV output is UTF-8"))
}

// --- compare ----------------------------------------------------------

fn single_scored_stratum(path: &str, fold_case: bool) -> Result<EvalResult, CliError> {
    let strata = read_bundles(path, fold_case)?;
    let scorable: Vec<_> = strata.iter().filter(|s| !s.is_singleton()).collect();
    match scorable.as_slice() {
        [stratum] => stratum_eval(stratum),
        [] => Err(CliError::Data(format!(
            "{path}: no non-singleton strata to compare"
        ))),
        many => Err(CliError::Data(format!(
            "{path}: {} bundle-size strata; compare needs exactly one (split the file by bundle size)",
            many.len()
        ))),
    }
}

fn compare_command(args: &CompareArgs) -> Result<String, CliError> {
    let (first, second) = match (args.n1, args.file1.as_deref()) {
        (Some(n1), None) => {
            let spec1 = spec_from_flags(n1, args.b1)?;
            let spec2 = spec_from_flags(args.n2.expect("required by clap"), args.b2)?;
            let point1 = ScorePoint::new(args.a1.expect("required"), args.c1.expect("required"));
            let point2 = ScorePoint::new(args.a2.expect("required"), args.c2.expect("required"));
            let first = consistency::evaluate(spec1, point1)
                .map_err(|err| CliError::Usage(err.to_string()))?;
            let second = consistency::evaluate(spec2, point2)
                .map_err(|err| CliError::Usage(err.to_string()))?;
            (first, second)
        }
        (None, Some(file1)) => (
            single_scored_stratum(file1, args.fold_case)?,
            single_scored_stratum(args.file2.as_deref().expect("required by clap"), args.fold_case)?,
        ),
        _ => {
            return Err(CliError::Usage(
                "provide either --n1/--a1/--c1 and --n2/--a2/--c2, or --file1 and --file2".into(),
            ))
        }
    };
    let comparison =
        report::compare_report(&first, &second).map_err(|err| CliError::Data(err.to_string()))?;
    let ordering_text = match comparison.ordering {
        Ordering::Less => "first < second",
        Ordering::Equal => "first = second",
        Ordering::Greater => "first > second",
    };
    if args.json {
        let value = json!({
            "first": eval_json(&comparison.first),
            "second": eval_json(&comparison.second),
            "ordering": ordering_text,
            "difference": comparison.difference,
            "first_chance": comparison.first_chance.to_string(),
            "second_chance": comparison.second_chance.to_string(),
        });
        return Ok(format!("{}\n", serde_json::to_string(&value).expect("valid json")));
    }
    let mut out = String::new();
    for (label, eval, chance) in [
        ("first ", &comparison.first, comparison.first_chance),
        ("second", &comparison.second, comparison.second_chance),
    ] {
        let _ = writeln!(
            out,
            "{label}  n={} b={} a={} c={}  rel-consistency {}  ({})  {}",
            eval.spec.bundles(),
            eval.spec.bundle_size(),
            eval.point.correct,
            eval.point.consistent,
            proportion(eval.rel_consistency),
            percent(eval.rel_consistency),
            chance
        );
    }
    let _ = writeln!(out, "ordering    {ordering_text} (decided exactly)");
    let _ = writeln!(out, "difference  {}", signed(comparison.difference));
    Ok(out)
}

// --- verify -----------------------------------------------------------

struct CheckOutcome {
    passed: bool,
    line: String,
}

fn check_line(passed: bool, colored: bool, text: &str) -> String {
    let tag = match (passed, colored) {
        (true, true) => "\x1b[32mok\x1b[0m  ",
        (true, false) => "ok  ",
        (false, true) => "\x1b[31mFAIL\x1b[0m",
        (false, false) => "FAIL",
    };
    format!("{tag} {text}\n")
}

fn verify_command(args: &VerifyArgs) -> Result<String, CliError> {
    if args.max_instances > oracle::ENUMERATION_CAP {
        return Err(CliError::Usage(format!(
            "--max-instances {} exceeds the enumeration cap of {}",
            args.max_instances,
            oracle::ENUMERATION_CAP
        )));
    }
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let colored = std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal();
    let mut checks: Vec<CheckOutcome> = Vec::new();

    for bundle_size in [2u64, 3] {
        for n in 1..=args.max_instances / bundle_size {
            let spec = BundleSpec::new(n, bundle_size).expect("small specs are valid");
            let census = oracle::enumerate_counts(spec)
                .map_err(|err| CliError::Usage(err.to_string()))?;
            let mut mismatches = 0u64;
            for a in 0..=spec.instances() {
                for c in 0..=n {
                    let counted = census.count(a, c);
                    let closed = consistency::mass(spec, c, a).expect("in-range query");
                    if closed != counted.into() {
                        mismatches += 1;
                    }
                }
                let marginal = census.accuracy_marginal(a);
                if relcons::binomial(spec.instances(), a) != marginal.into() {
                    mismatches += 1;
                }
            }
            let passed = mismatches == 0;
            let text = format!(
                "enumeration matches closed-form counts: b={bundle_size} n={n} ({} patterns{})",
                1u64 << spec.instances(),
                if passed {
                    String::new()
                } else {
                    format!(", {mismatches} mismatches")
                }
            );
            checks.push(CheckOutcome {
                passed,
                line: check_line(passed, colored, &text),
            });
        }
    }

    let spec = BundleSpec::new(100, 2).expect("valid");
    let accuracy = 130;
    let drawn = oracle::sample_consistency(spec, accuracy, args.samples, args.seed)
        .map_err(|err| CliError::Usage(err.to_string()))?;
    let dist = consistency::distribution(spec, accuracy).expect("in-range accuracy");
    let mut sup_gap = 0.0f64;
    for c in 0..=spec.bundles() {
        let exact = MassRatio::new(dist.cumulative_mass(c), dist.total().clone())
            .expect("cumulative mass never exceeds the total")
            .to_unit_f64();
        sup_gap = sup_gap.max((exact - drawn.cdf(c)).abs());
    }
    // Dvoretzky-Kiefer-Wolfowitz bound at failure probability 1e-9; about
    // 0.01 at the default 100000 draws, wider for smaller runs.
    let tolerance = (f64::ln(2.0 / 1e-9) / (2.0 * args.samples as f64)).sqrt();
    let passed = sup_gap < tolerance;
    let text = format!(
        "sampled CDF tracks the exact CDF: n=100 b=2 a=130, {} draws, seed {}, sup gap {sup_gap:.4} (bound {tolerance:.4})",
        args.samples, args.seed
    );
    checks.push(CheckOutcome {
        passed,
        line: check_line(passed, colored, &text),
    });

    let mut out = String::new();
    for check in &checks {
        out.push_str(&check.line);
    }
    let failed = checks.iter().filter(|check| !check.passed).count();
    if failed == 0 {
        let _ = writeln!(out, "verify: {} checks passed", checks.len());
        Ok(out)
    } else {
        let _ = writeln!(out, "verify: {failed} of {} checks FAILED", checks.len());
        Err(CliError::VerificationFailed { report: out })
    }
}

// --- replicate ----------------------------------------------------------

fn replicate_command(args: &ReplicateArgs) -> Result<String, CliError> {
    let rows = report::replication_rows();
    let mut computed = Vec::new();
    for row in &rows {
        let out = report::rc_for_proportions(&row.input, args.rounding)
            .map_err(|err| CliError::Data(err.to_string()))?;
        computed.push((row, out.eval));
    }
    if args.json {
        let values: Vec<_> = computed
            .iter()
            .map(|(row, eval)| {
                json!({
                    "group": row.group,
                    "label": row.label,
                    "bundles": row.input.spec().bundles(),
                    "accuracy_pct": row.input.accuracy_pct(),
                    "consistency_pct": row.input.consistency_pct(),
                    "rel_consistency_pct": eval.rel_consistency * 100.0,
                    "reported_rc_pct": row.reported_rc_pct,
                    "correct": eval.point.correct,
                    "consistent": eval.point.consistent,
                })
            })
            .collect();
        let value = json!({ "rounding": args.rounding.to_string(), "rows": values });
        return Ok(format!("{}\n", serde_json::to_string(&value).expect("valid json")));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:<12} {:>6} {:>7} {:>7} {:>9} {:>9}",
        "group", "row", "n", "acc%", "cons%", "rc%", "reported"
    );
    for (row, eval) in &computed {
        let _ = writeln!(
            out,
            "{:<18} {:<12} {:>6} {:>7.1} {:>7.1} {:>9.1} {:>9.1}",
            row.group,
            row.label,
            row.input.spec().bundles(),
            row.input.accuracy_pct(),
            row.input.consistency_pct(),
            eval.rel_consistency * 100.0,
            row.reported_rc_pct
        );
    }
    Ok(out)
}
