//! Percentage-based scoring (replication of published results), model
//! comparisons with exact ordering, and long-form CSV grids for plotting.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::consistency::{
    self, BundleSpec, ConsistencyError, EvalResult, ScorePoint,
};
use crate::exact::{self, BigCount, FactorialTable, MassRatio};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("percentage {value} is outside [0, 100]")]
    PercentOutOfRange { value: f64 },
    #[error("metric {metric} needs pair bundles (bundle size 2), got size {size}")]
    MetricNeedsPairBundles { metric: GridMetric, size: u64 },
    #[error("unknown grid metric {name:?}; expected one of {expected}")]
    UnknownMetric { name: String, expected: String },
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How fractional percent-derived counts are snapped to integers.
///
/// Published tables report percentages only; recovering the underlying integer
/// counts needs a convention. Truncation reproduces the published
/// relative-consistency values, so it is the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Rounding {
    #[default]
    Floor,
    HalfUp,
    HalfEven,
}

impl Rounding {
    pub const NAMES: [&'static str; 3] = ["floor", "half-up", "half-even"];
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rounding::Floor => "floor",
            Rounding::HalfUp => "half-up",
            Rounding::HalfEven => "half-even",
        };
        f.write_str(name)
    }
}

impl FromStr for Rounding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "floor" => Ok(Rounding::Floor),
            "half-up" => Ok(Rounding::HalfUp),
            "half-even" => Ok(Rounding::HalfEven),
            other => Err(format!(
                "unknown rounding {other:?}; expected one of {}",
                Rounding::NAMES.join(", ")
            )),
        }
    }
}

/// A model outcome reported as percentages, as published tables do.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionInput {
    spec: BundleSpec,
    accuracy_pct: f64,
    consistency_pct: f64,
    accuracy_split: Option<(f64, f64)>,
}

impl ProportionInput {
    pub fn new(
        bundles: u64,
        bundle_size: u64,
        accuracy_pct: f64,
        consistency_pct: f64,
    ) -> Result<Self, ReportError> {
        let spec = BundleSpec::new(bundles, bundle_size)?;
        check_pct(accuracy_pct)?;
        check_pct(consistency_pct)?;
        Ok(Self {
            spec,
            accuracy_pct,
            consistency_pct,
            accuracy_split: None,
        })
    }

    /// Accuracies reported separately for original and contrast instances are
    /// averaged into the overall accuracy.
    pub fn with_split_accuracy(
        bundles: u64,
        bundle_size: u64,
        original_pct: f64,
        contrast_pct: f64,
        consistency_pct: f64,
    ) -> Result<Self, ReportError> {
        check_pct(original_pct)?;
        check_pct(contrast_pct)?;
        let mut input = Self::new(
            bundles,
            bundle_size,
            (original_pct + contrast_pct) / 2.0,
            consistency_pct,
        )?;
        input.accuracy_split = Some((original_pct, contrast_pct));
        Ok(input)
    }

    pub fn spec(&self) -> BundleSpec {
        self.spec
    }

    pub fn accuracy_pct(&self) -> f64 {
        self.accuracy_pct
    }

    pub fn consistency_pct(&self) -> f64 {
        self.consistency_pct
    }

    pub fn accuracy_split(&self) -> Option<(f64, f64)> {
        self.accuracy_split
    }
}

fn check_pct(value: f64) -> Result<(), ReportError> {
    if !(0.0..=100.0).contains(&value) || value.is_nan() {
        return Err(ReportError::PercentOutOfRange { value });
    }
    Ok(())
}

/// Snap pct% of base to an integer count.
///
/// The percentage is taken at 4-decimal precision and converted with integer
/// arithmetic, so binary-float artifacts (217 * 0.788 = 170.999...) cannot
/// shift the result across an integer boundary.
fn pct_to_count(pct: f64, base: u64, rounding: Rounding) -> u64 {
    const DEN: u128 = 1_000_000;
    let scaled = (pct * 10_000.0).round() as u128;
    let num = scaled * base as u128;
    let count = match rounding {
        Rounding::Floor => num / DEN,
        Rounding::HalfUp => (num + DEN / 2) / DEN,
        Rounding::HalfEven => {
            let quotient = num / DEN;
            let remainder = num % DEN;
            match (2 * remainder).cmp(&DEN) {
                Ordering::Less => quotient,
                Ordering::Greater => quotient + 1,
                Ordering::Equal if quotient % 2 == 0 => quotient,
                Ordering::Equal => quotient + 1,
            }
        }
    };
    count as u64
}

/// Outcome of percentage-based scoring, including how the counts were derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionEval {
    pub eval: EvalResult,
    /// Consistency count before clamping, when rounding landed outside the
    /// achievable range. Counts that land outside indicate inconsistent
    /// source percentages, so the clamp is surfaced rather than silent.
    pub clamped_from: Option<u64>,
}

/// Convert reported percentages to counts under `rounding` and score them.
/// A consistency count outside the achievable range is clamped to the nearer
/// endpoint and reported via `clamped_from`.
pub fn rc_for_proportions(
    input: &ProportionInput,
    rounding: Rounding,
) -> Result<ProportionEval, ReportError> {
    let spec = input.spec;
    let correct = pct_to_count(input.accuracy_pct, spec.instances(), rounding);
    let raw_consistent = pct_to_count(input.consistency_pct, spec.bundles(), rounding);
    let bounds = consistency::bounds(spec, correct)?;
    let consistent = raw_consistent.clamp(bounds.min, bounds.max);
    let eval = consistency::evaluate(spec, ScorePoint::new(correct, consistent))?;
    Ok(ProportionEval {
        eval,
        clamped_from: (consistent != raw_consistent).then_some(raw_consistent),
    })
}

/// What a grid cell holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMetric {
    /// P(c | a) under the uniform-pattern model.
    Probability,
    /// log10 of that probability; defined everywhere inside the achievable
    /// range, where masses are strictly positive.
    Log10Probability,
    /// The CDF: relative consistency.
    RelConsistency,
    /// Consistency rescaled over the achievable range.
    Scaled,
    /// Fully consistent share of partially correct bundles (pair bundles).
    PartialCorrect,
    /// Scaled score minus relative consistency.
    ScaledDelta,
    /// Partial-correct score minus relative consistency (pair bundles).
    PartialCorrectDelta,
}

impl GridMetric {
    pub const NAMES: [&'static str; 7] = [
        "probability",
        "log10-probability",
        "rel-consistency",
        "scaled",
        "partial-correct",
        "scaled-delta",
        "partial-correct-delta",
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GridMetric::Probability => "probability",
            GridMetric::Log10Probability => "log10-probability",
            GridMetric::RelConsistency => "rel-consistency",
            GridMetric::Scaled => "scaled",
            GridMetric::PartialCorrect => "partial-correct",
            GridMetric::ScaledDelta => "scaled-delta",
            GridMetric::PartialCorrectDelta => "partial-correct-delta",
        }
    }

    fn needs_pair_bundles(&self) -> bool {
        matches!(self, GridMetric::PartialCorrect | GridMetric::PartialCorrectDelta)
    }

    fn needs_distribution(&self) -> bool {
        !matches!(self, GridMetric::Scaled | GridMetric::PartialCorrect)
    }
}

impl fmt::Display for GridMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GridMetric {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "probability" => Ok(GridMetric::Probability),
            "log10-probability" => Ok(GridMetric::Log10Probability),
            "rel-consistency" => Ok(GridMetric::RelConsistency),
            "scaled" => Ok(GridMetric::Scaled),
            "partial-correct" => Ok(GridMetric::PartialCorrect),
            "scaled-delta" => Ok(GridMetric::ScaledDelta),
            "partial-correct-delta" => Ok(GridMetric::PartialCorrectDelta),
            other => Err(ReportError::UnknownMetric {
                name: other.to_string(),
                expected: GridMetric::NAMES.join(", "),
            }),
        }
    }
}

/// One grid entry: the metric value at (accuracy count, consistency count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub correct: u64,
    pub consistent: u64,
    pub value: f64,
}

/// All cells of one metric over every achievable (a, c), ordered by (a, c).
///
/// One column per accuracy; each column covers exactly the achievable
/// consistencies.
pub fn grid_cells(spec: BundleSpec, metric: GridMetric) -> Result<Vec<GridCell>, ReportError> {
    if metric.needs_pair_bundles() && spec.bundle_size() != 2 {
        return Err(ReportError::MetricNeedsPairBundles {
            metric,
            size: spec.bundle_size(),
        });
    }
    let table = FactorialTable::new(spec.instances());
    let mut cells = Vec::new();
    for correct in 0..=spec.instances() {
        let bounds = consistency::bounds(spec, correct)?;
        if metric.needs_distribution() {
            let dist = consistency::distribution_with(&table, spec, correct)?;
            let mut cumulative = BigCount::from(0u32);
            for (consistent, mass) in dist.masses() {
                cumulative += mass;
                let rc = || {
                    MassRatio::new(cumulative.clone(), dist.total().clone())
                        .expect("cumulative mass never exceeds the total")
                        .to_unit_f64()
                };
                let value = match metric {
                    GridMetric::Probability => dist.probability(consistent),
                    GridMetric::Log10Probability => {
                        MassRatio::new(mass.clone(), dist.total().clone())
                            .expect("mass never exceeds the total")
                            .log10()
                            .expect("masses inside the achievable range are positive")
                    }
                    GridMetric::RelConsistency => rc(),
                    GridMetric::ScaledDelta => {
                        scaled_value(bounds.min, bounds.max, consistent) - rc()
                    }
                    GridMetric::PartialCorrectDelta => {
                        partial_value(correct, consistent) - rc()
                    }
                    GridMetric::Scaled | GridMetric::PartialCorrect => unreachable!(),
                };
                cells.push(GridCell {
                    correct,
                    consistent,
                    value,
                });
            }
        } else {
            for consistent in bounds.range() {
                let value = match metric {
                    GridMetric::Scaled => scaled_value(bounds.min, bounds.max, consistent),
                    GridMetric::PartialCorrect => partial_value(correct, consistent),
                    _ => unreachable!(),
                };
                cells.push(GridCell {
                    correct,
                    consistent,
                    value,
                });
            }
        }
    }
    Ok(cells)
}

fn scaled_value(min: u64, max: u64, consistent: u64) -> f64 {
    if min == max {
        1.0
    } else {
        (consistent - min) as f64 / (max - min) as f64
    }
}

fn partial_value(correct: u64, consistent: u64) -> f64 {
    if correct == 0 {
        1.0
    } else {
        consistent as f64 / (correct - consistent) as f64
    }
}

/// Format with at least six significant digits, staying plain-decimal for
/// ordinary magnitudes.
fn format_value(value: f64) -> String {
    if value == 0.0 {
        return "0.000000".to_string();
    }
    let exponent = value.abs().log10().floor() as i32;
    if (-4..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        format!("{value:.decimals$}")
    } else {
        format!("{value:.5e}")
    }
}

/// Write the grid as long-form CSV: header `a,c,value`, LF line endings,
/// rows ordered by (a, c).
pub fn write_grid_csv<W: Write>(
    spec: BundleSpec,
    metric: GridMetric,
    mut writer: W,
) -> Result<(), ReportError> {
    writer.write_all(b"a,c,value\n")?;
    for cell in grid_cells(spec, metric)? {
        writeln!(
            writer,
            "{},{},{}",
            cell.correct,
            cell.consistent,
            format_value(cell.value)
        )?;
    }
    Ok(())
}

/// Standing of one model's relative consistency against chance (0.5),
/// decided exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChanceVerdict {
    Above,
    At,
    Below,
}

impl fmt::Display for ChanceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            ChanceVerdict::Above => "above chance",
            ChanceVerdict::At => "at chance",
            ChanceVerdict::Below => "below chance",
        };
        f.write_str(text)
    }
}

fn chance_verdict(ratio: &MassRatio) -> ChanceVerdict {
    let half = MassRatio::new(BigCount::from(1u32), BigCount::from(2u32)).expect("1/2 is valid");
    match exact::compare_ratios(ratio, &half).ordering {
        Ordering::Greater => ChanceVerdict::Above,
        Ordering::Equal => ChanceVerdict::At,
        Ordering::Less => ChanceVerdict::Below,
    }
}

/// Two models side by side: scores, exact ordering, and chance verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub first: EvalResult,
    pub second: EvalResult,
    /// Ordering of first vs second relative consistency, decided exactly.
    pub ordering: Ordering,
    /// First minus second relative consistency, from the float views.
    pub difference: f64,
    pub first_chance: ChanceVerdict,
    pub second_chance: ChanceVerdict,
}

/// Compare two evaluated models. The ordering and the chance verdicts are
/// recomputed from exact cumulative counts, not from the stored floats.
pub fn compare_report(
    first: &EvalResult,
    second: &EvalResult,
) -> Result<ComparisonReport, ReportError> {
    let ratio_of = |result: &EvalResult| -> Result<MassRatio, ReportError> {
        Ok(consistency::distribution(result.spec, result.point.correct)?
            .cumulative_ratio(result.point.consistent)?)
    };
    let r1 = ratio_of(first)?;
    let r2 = ratio_of(second)?;
    Ok(ComparisonReport {
        first: first.clone(),
        second: second.clone(),
        ordering: exact::compare_ratios(&r1, &r2).ordering,
        difference: r1.to_unit_f64() - r2.to_unit_f64(),
        first_chance: chance_verdict(&r1),
        second_chance: chance_verdict(&r2),
    })
}

/// One published result to replicate: its inputs and the reported score.
#[derive(Debug, Clone)]
pub struct ReplicationRow {
    /// Which published comparison the row belongs to.
    pub group: &'static str,
    pub label: &'static str,
    pub input: ProportionInput,
    /// Relative consistency (percent) as published.
    pub reported_rc_pct: f64,
}

/// Built-in replication targets: four contrast-set benchmarks scored with
/// pair bundles, and three training objectives on the same 844-bundle set.
pub fn replication_rows() -> Vec<ReplicationRow> {
    let row = |group, label, n, acc, cons, reported| ReplicationRow {
        group,
        label,
        input: ProportionInput::new(n, 2, acc, cons).expect("built-in rows are valid"),
        reported_rc_pct: reported,
    };
    vec![
        row("contrast-sets", "UD Parsing", 150, 55.3, 17.3, 0.0),
        row("contrast-sets", "PERSPECTRUM", 217, 88.0, 78.8, 97.6),
        row("contrast-sets", "ROPES", 974, 40.1, 17.6, 97.8),
        row("contrast-sets", "MC-TACO", 646, 26.0, 8.0, 95.2),
        row("ropes-objectives", "MLE", 844, 65.7, 52.1, 100.0),
        row("ropes-objectives", "MLE+UL", 844, 68.3, 55.6, 100.0),
        row("ropes-objectives", "MLE+CE", 844, 76.6, 64.7, 100.0),
    ]
}
