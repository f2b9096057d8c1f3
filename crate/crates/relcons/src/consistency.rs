//! Achievable-consistency bounds, exact pattern counts, the distribution of
//! consistencies at a fixed accuracy, and the scores derived from it.
//!
//! For a test set of `n` bundles of `b` instances, a response pattern is a
//! choice of which instances are answered correctly. At accuracy `a` there are
//! `C(nb, a)` patterns; `mass(c, a)` counts those with exactly `c` fully
//! correct bundles. Relative consistency is the CDF of that distribution
//! evaluated at the observed consistency, computed as one exact cumulative
//! count divided once at the end.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{self, BigCount, FactorialTable, MassRatio};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConsistencyError {
    #[error("bundle count must be at least 1")]
    NoBundles,
    #[error("bundle size {size} is degenerate: consistency over singleton bundles is accuracy")]
    DegenerateBundleSize { size: u64 },
    #[error("correct-instance count {count} exceeds the {max} instances in the test set")]
    AccuracyOutOfRange { count: u64, max: u64 },
    #[error("consistency count {count} exceeds the {max} bundles in the test set")]
    ConsistencyOutOfRange { count: u64, max: u64 },
    #[error(
        "score (correct={correct}, consistent={consistent}) is not achievable: \
         with {correct} correct instances consistency must lie in [{min}, {max}]"
    )]
    InfeasibleScore {
        correct: u64,
        consistent: u64,
        min: u64,
        max: u64,
    },
    #[error("bundle size {size} is not supported for this score; only pair bundles are")]
    UnsupportedBundleSize { size: u64 },
}

/// Shape of a contrastive test set: `n` bundles of `b` instances each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BundleSpec {
    n: u64,
    b: u64,
}

impl BundleSpec {
    pub fn new(bundles: u64, bundle_size: u64) -> Result<Self, ConsistencyError> {
        if bundles == 0 {
            return Err(ConsistencyError::NoBundles);
        }
        if bundle_size < 2 {
            return Err(ConsistencyError::DegenerateBundleSize { size: bundle_size });
        }
        Ok(Self {
            n: bundles,
            b: bundle_size,
        })
    }

    /// Number of bundles.
    pub fn bundles(&self) -> u64 {
        self.n
    }

    /// Instances per bundle.
    pub fn bundle_size(&self) -> u64 {
        self.b
    }

    /// Total instances in the test set.
    pub fn instances(&self) -> u64 {
        self.n * self.b
    }

    fn check_accuracy(&self, correct: u64) -> Result<(), ConsistencyError> {
        if correct > self.instances() {
            return Err(ConsistencyError::AccuracyOutOfRange {
                count: correct,
                max: self.instances(),
            });
        }
        Ok(())
    }

    fn check_consistency(&self, consistent: u64) -> Result<(), ConsistencyError> {
        if consistent > self.n {
            return Err(ConsistencyError::ConsistencyOutOfRange {
                count: consistent,
                max: self.n,
            });
        }
        Ok(())
    }
}

/// A model's outcome on one test set, in count form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ScorePoint {
    /// Correctly answered instances.
    pub correct: u64,
    /// Fully correctly answered bundles.
    pub consistent: u64,
}

impl ScorePoint {
    pub fn new(correct: u64, consistent: u64) -> Self {
        Self {
            correct,
            consistent,
        }
    }
}

/// Inclusive range of consistencies achievable at a fixed accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub min: u64,
    pub max: u64,
}

impl Bounds {
    pub fn contains(&self, consistent: u64) -> bool {
        self.min <= consistent && consistent <= self.max
    }

    pub fn range(&self) -> std::ops::RangeInclusive<u64> {
        self.min..=self.max
    }

    /// Number of achievable consistencies.
    pub fn len(&self) -> u64 {
        self.max - self.min + 1
    }

    pub fn is_empty(&self) -> bool {
        false // the achievable range always holds at least one value
    }
}

/// Above this many instances a memoized factorial table would hold gigabytes;
/// one-shot queries switch to direct multiplicative binomials instead.
const FACTORIAL_TABLE_MAX_INSTANCES: u64 = 4096;

/// Where binomial coefficients come from: a memoized table for repeated
/// queries at one test-set size, or direct evaluation for one-shot queries
/// too large to tabulate.
pub(crate) enum Binomials<'a> {
    Memoized(&'a FactorialTable),
    Direct,
}

impl Binomials<'_> {
    fn get(&self, n: u64, k: u64) -> BigCount {
        match self {
            Binomials::Memoized(table) => table.binomial(n, k),
            Binomials::Direct => exact::binomial(n, k),
        }
    }
}

fn with_binomials<T>(instances: u64, compute: impl FnOnce(&Binomials) -> T) -> T {
    if instances <= FACTORIAL_TABLE_MAX_INSTANCES {
        let table = FactorialTable::new(instances);
        compute(&Binomials::Memoized(&table))
    } else {
        compute(&Binomials::Direct)
    }
}

/// Achievable consistency range at accuracy `correct`.
///
/// A bundle is inconsistent only if at least one of its instances is wrong, so
/// at most `nb - a` bundles can be inconsistent; and a fully correct bundle
/// consumes `b` correct instances, so at most `a / b` bundles can be fully
/// correct.
pub fn bounds(spec: BundleSpec, correct: u64) -> Result<Bounds, ConsistencyError> {
    spec.check_accuracy(correct)?;
    let slack = spec.n * (spec.b - 1);
    let min = correct.saturating_sub(slack);
    let max = correct / spec.b;
    Ok(Bounds { min, max })
}

/// Number of response patterns with exactly `correct` correct instances:
/// C(nb, a).
pub fn total_mass(spec: BundleSpec, correct: u64) -> Result<BigCount, ConsistencyError> {
    spec.check_accuracy(correct)?;
    Ok(exact::binomial(spec.instances(), correct))
}

/// Ways to select `selected` cells of a `rows` x `width` grid with no row
/// fully selected, by inclusion-exclusion over the fully selected rows.
pub fn g_count(rows: u64, width: u64, selected: u64) -> BigCount {
    assert!(width >= 1, "grid width must be at least 1");
    with_binomials(rows * width, |bin| g_count_with(bin, rows, width, selected))
}

fn g_count_with(bin: &Binomials, rows: u64, width: u64, selected: u64) -> BigCount {
    if selected > rows * (width - 1) {
        return BigCount::zero();
    }
    let full_rows_max = rows.min(selected / width);
    let mut sum = BigInt::zero();
    for full in 0..=full_rows_max {
        let term = bin.get(rows, full)
            * bin.get((rows - full) * width, selected - full * width);
        if full % 2 == 0 {
            sum += BigInt::from(term);
        } else {
            sum -= BigInt::from(term);
        }
    }
    sum.to_biguint()
        .expect("inclusion-exclusion sum counts a nonnegative quantity")
}

/// Number of patterns with accuracy `correct` and consistency `consistent`.
///
/// Zero outside the achievable range. Pair bundles use the closed form
/// C(n,c) C(n-c, a-2c) 2^(a-2c); larger bundles go through [`g_count`].
pub fn mass(spec: BundleSpec, consistent: u64, correct: u64) -> Result<BigCount, ConsistencyError> {
    spec.check_accuracy(correct)?;
    spec.check_consistency(consistent)?;
    if !bounds(spec, correct)?.contains(consistent) {
        return Ok(BigCount::zero());
    }
    Ok(with_binomials(spec.instances(), |bin| {
        mass_with(bin, spec, consistent, correct)
    }))
}

/// As [`mass`], but always via the inclusion-exclusion route, for any bundle
/// size. Kept separate so the two routes can be checked against each other.
pub fn mass_general(
    spec: BundleSpec,
    consistent: u64,
    correct: u64,
) -> Result<BigCount, ConsistencyError> {
    spec.check_accuracy(correct)?;
    spec.check_consistency(consistent)?;
    if !bounds(spec, correct)?.contains(consistent) {
        return Ok(BigCount::zero());
    }
    Ok(with_binomials(spec.instances(), |bin| {
        mass_general_with(bin, spec, consistent, correct)
    }))
}

/// Mass for a score already known to be within bounds.
fn mass_with(bin: &Binomials, spec: BundleSpec, consistent: u64, correct: u64) -> BigCount {
    if spec.b == 2 {
        mass_pairs_with(bin, spec, consistent, correct)
    } else {
        mass_general_with(bin, spec, consistent, correct)
    }
}

fn mass_pairs_with(bin: &Binomials, spec: BundleSpec, consistent: u64, correct: u64) -> BigCount {
    let singles = correct - 2 * consistent;
    bin.get(spec.n, consistent) * bin.get(spec.n - consistent, singles) * (BigCount::one() << singles)
}

fn mass_general_with(bin: &Binomials, spec: BundleSpec, consistent: u64, correct: u64) -> BigCount {
    bin.get(spec.n, consistent)
        * g_count_with(
            bin,
            spec.n - consistent,
            spec.b,
            correct - consistent * spec.b,
        )
}

/// Exact distribution of achievable consistencies at one accuracy.
///
/// Masses are stored densely from the minimum achievable consistency upward;
/// the achievable set is always a contiguous range.
#[derive(Debug, Clone)]
pub struct ConsistencyDistribution {
    spec: BundleSpec,
    correct: u64,
    bounds: Bounds,
    masses: Vec<BigCount>,
    total: BigCount,
}

impl ConsistencyDistribution {
    pub fn spec(&self) -> BundleSpec {
        self.spec
    }

    pub fn correct(&self) -> u64 {
        self.correct
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Total pattern count at this accuracy, C(nb, a).
    pub fn total(&self) -> &BigCount {
        &self.total
    }

    /// Pattern count for one consistency; zero outside the achievable range.
    pub fn mass(&self, consistent: u64) -> BigCount {
        if !self.bounds.contains(consistent) {
            return BigCount::zero();
        }
        self.masses[(consistent - self.bounds.min) as usize].clone()
    }

    /// All (consistency, mass) pairs in increasing consistency order.
    pub fn masses(&self) -> impl Iterator<Item = (u64, &BigCount)> {
        self.bounds.range().zip(self.masses.iter())
    }

    /// Probability of one consistency under the uniform-pattern model.
    pub fn probability(&self, consistent: u64) -> f64 {
        MassRatio::new(self.mass(consistent), self.total.clone())
            .expect("mass never exceeds the total pattern count")
            .to_unit_f64()
    }

    /// Cumulative pattern count for consistencies up to and including the
    /// given one. Equals the total once the upper bound is reached.
    pub fn cumulative_mass(&self, consistent: u64) -> BigCount {
        if consistent >= self.bounds.max {
            return self.total.clone();
        }
        let mut sum = BigCount::zero();
        for (c, m) in self.masses() {
            if c > consistent {
                break;
            }
            sum += m;
        }
        sum
    }

    /// The CDF at the given consistency as an exact ratio.
    pub fn cumulative_ratio(&self, consistent: u64) -> Result<MassRatio, ConsistencyError> {
        if !self.bounds.contains(consistent) {
            return Err(ConsistencyError::InfeasibleScore {
                correct: self.correct,
                consistent,
                min: self.bounds.min,
                max: self.bounds.max,
            });
        }
        Ok(MassRatio::new(self.cumulative_mass(consistent), self.total.clone())
            .expect("cumulative mass never exceeds the total"))
    }

    /// Relative consistency: probability that an equally accurate uniformly
    /// random model is at most this consistent. Exactly 1.0 at the upper bound.
    pub fn rel_consistency(&self, consistent: u64) -> Result<f64, ConsistencyError> {
        Ok(self.cumulative_ratio(consistent)?.to_unit_f64())
    }
}

/// Compute the full distribution of consistencies at accuracy `correct`.
pub fn distribution(
    spec: BundleSpec,
    correct: u64,
) -> Result<ConsistencyDistribution, ConsistencyError> {
    with_binomials(spec.instances(), |bin| distribution_with(bin, spec, correct))
}

pub(crate) fn distribution_with(
    bin: &Binomials,
    spec: BundleSpec,
    correct: u64,
) -> Result<ConsistencyDistribution, ConsistencyError> {
    let bounds = bounds(spec, correct)?;
    let masses = if spec.b == 2 {
        pair_masses_by_recurrence(bin, spec, correct, bounds)
    } else {
        bounds
            .range()
            .map(|c| mass_general_with(bin, spec, c, correct))
            .collect()
    };
    let total = bin.get(spec.instances(), correct);
    debug_assert_eq!(
        masses.iter().sum::<BigCount>(),
        total,
        "masses over the achievable range must partition the total"
    );
    Ok(ConsistencyDistribution {
        spec,
        correct,
        bounds,
        masses,
        total,
    })
}

/// All pair-bundle masses in one sweep.
///
/// Adjacent masses satisfy
///   m(c+1) * 4 (c+1) (n+c+1-a) = m(c) * (a-2c) (a-2c-1),
/// and every step divides exactly, so a single closed-form evaluation at the
/// lower bound seeds an integer recurrence across the whole range. This keeps
/// large-n sweeps (grids, cumulative sums) linear in big-integer operations.
fn pair_masses_by_recurrence(
    bin: &Binomials,
    spec: BundleSpec,
    correct: u64,
    bounds: Bounds,
) -> Vec<BigCount> {
    let n = spec.n;
    let mut masses = Vec::with_capacity(bounds.len() as usize);
    let mut current = mass_pairs_with(bin, spec, bounds.min, correct);
    for c in bounds.range() {
        masses.push(current.clone());
        if c == bounds.max {
            break;
        }
        let singles = correct - 2 * c;
        let numerator = singles * (singles - 1);
        let denominator = 4 * (c + 1) * (n + c + 1 - correct);
        current *= numerator;
        debug_assert!((&current % denominator).is_zero());
        current /= denominator;
    }
    masses
}

/// Cumulative pattern count up to `consistent` at accuracy `correct`.
pub fn cumulative_mass(
    spec: BundleSpec,
    consistent: u64,
    correct: u64,
) -> Result<BigCount, ConsistencyError> {
    spec.check_consistency(consistent)?;
    Ok(distribution(spec, correct)?.cumulative_mass(consistent))
}

fn validated_distribution(
    spec: BundleSpec,
    point: ScorePoint,
) -> Result<ConsistencyDistribution, ConsistencyError> {
    spec.check_consistency(point.consistent)?;
    let dist = distribution(spec, point.correct)?;
    if !dist.bounds().contains(point.consistent) {
        return Err(ConsistencyError::InfeasibleScore {
            correct: point.correct,
            consistent: point.consistent,
            min: dist.bounds().min,
            max: dist.bounds().max,
        });
    }
    Ok(dist)
}

/// Relative consistency of one scored model.
pub fn rel_consistency(spec: BundleSpec, point: ScorePoint) -> Result<f64, ConsistencyError> {
    validated_distribution(spec, point)?.rel_consistency(point.consistent)
}

/// Exact ordering of two models' relative consistencies plus the float view.
#[derive(Debug, Clone, PartialEq)]
pub struct RcDifference {
    /// Ordering of the first model's relative consistency against the second,
    /// decided by exact cross-multiplication of the cumulative ratios.
    pub ordering: Ordering,
    /// First minus second, from two one-division evaluations.
    pub difference: f64,
    pub first: f64,
    pub second: f64,
}

/// Compare two scored models, possibly on different test sets.
///
/// The sign comes from the exact integer mu1*M2 - mu2*M1, so models whose
/// float scores round together are still ordered correctly.
pub fn rc_difference(
    spec1: BundleSpec,
    point1: ScorePoint,
    spec2: BundleSpec,
    point2: ScorePoint,
) -> Result<RcDifference, ConsistencyError> {
    let r1 = validated_distribution(spec1, point1)?.cumulative_ratio(point1.consistent)?;
    let r2 = validated_distribution(spec2, point2)?.cumulative_ratio(point2.consistent)?;
    let ordering = exact::compare_ratios(&r1, &r2).ordering;
    let first = r1.to_unit_f64();
    let second = r2.to_unit_f64();
    Ok(RcDifference {
        ordering,
        difference: first - second,
        first,
        second,
    })
}

/// Consistency rescaled linearly over the achievable range; 1.0 when the range
/// is a single point (the model achieved the only, hence maximal, value).
pub fn scaled_score(spec: BundleSpec, point: ScorePoint) -> Result<f64, ConsistencyError> {
    spec.check_consistency(point.consistent)?;
    let bounds = bounds(spec, point.correct)?;
    if !bounds.contains(point.consistent) {
        return Err(ConsistencyError::InfeasibleScore {
            correct: point.correct,
            consistent: point.consistent,
            min: bounds.min,
            max: bounds.max,
        });
    }
    if bounds.min == bounds.max {
        return Ok(1.0);
    }
    Ok((point.consistent - bounds.min) as f64 / (bounds.max - bounds.min) as f64)
}

/// Fully consistent bundles as a share of bundles with at least one correct
/// instance. Pair bundles only: a touched bundle is either fully correct or
/// singly correct, so the touched count a - c is determined by the score.
/// Vacuously 1.0 when nothing was answered correctly.
pub fn partial_correct_score(
    spec: BundleSpec,
    point: ScorePoint,
) -> Result<f64, ConsistencyError> {
    if spec.b != 2 {
        return Err(ConsistencyError::UnsupportedBundleSize { size: spec.b });
    }
    spec.check_consistency(point.consistent)?;
    let bounds = bounds(spec, point.correct)?;
    if !bounds.contains(point.consistent) {
        return Err(ConsistencyError::InfeasibleScore {
            correct: point.correct,
            consistent: point.consistent,
            min: bounds.min,
            max: bounds.max,
        });
    }
    if point.correct == 0 {
        return Ok(1.0);
    }
    Ok(point.consistent as f64 / (point.correct - point.consistent) as f64)
}

/// Everything computed for one scored model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub spec: BundleSpec,
    pub point: ScorePoint,
    /// Correct instances as a proportion of all instances.
    pub accuracy: f64,
    /// Fully correct bundles as a proportion of all bundles.
    pub consistency: f64,
    pub rel_consistency: f64,
    pub scaled_score: f64,
    /// Defined for pair bundles only.
    pub partial_correct_score: Option<f64>,
}

/// Score one model: proportions, relative consistency, and the alternative
/// rescalings, all from a single distribution pass.
pub fn evaluate(spec: BundleSpec, point: ScorePoint) -> Result<EvalResult, ConsistencyError> {
    let rel = rel_consistency(spec, point)?;
    let scaled = scaled_score(spec, point)?;
    let partial = if spec.b == 2 {
        Some(partial_correct_score(spec, point)?)
    } else {
        None
    };
    Ok(EvalResult {
        spec,
        point,
        accuracy: point.correct as f64 / spec.instances() as f64,
        consistency: point.consistent as f64 / spec.bundles() as f64,
        rel_consistency: rel,
        scaled_score: scaled,
        partial_correct_score: partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(n: u64, b: u64) -> BundleSpec {
        BundleSpec::new(n, b).unwrap()
    }

    fn count(v: u64) -> BigCount {
        BigCount::from(v)
    }

    #[test]
    fn spec_rejects_degenerate_shapes() {
        assert_eq!(BundleSpec::new(0, 2), Err(ConsistencyError::NoBundles));
        assert_eq!(
            BundleSpec::new(5, 1),
            Err(ConsistencyError::DegenerateBundleSize { size: 1 })
        );
        assert_eq!(
            BundleSpec::new(5, 0),
            Err(ConsistencyError::DegenerateBundleSize { size: 0 })
        );
        assert!(BundleSpec::new(1, 2).is_ok());
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(bounds(spec(100, 2), 0).unwrap(), Bounds { min: 0, max: 0 });
        assert_eq!(
            bounds(spec(100, 2), 130).unwrap(),
            Bounds { min: 30, max: 65 }
        );
        // Verified by enumerating all 2^9 patterns with 8 correct: only c=2 occurs.
        assert_eq!(bounds(spec(3, 3), 8).unwrap(), Bounds { min: 2, max: 2 });
        // Degenerate endpoints: nothing correct and everything correct.
        assert_eq!(bounds(spec(7, 3), 21).unwrap(), Bounds { min: 7, max: 7 });
        assert_eq!(
            bounds(spec(100, 2), 201),
            Err(ConsistencyError::AccuracyOutOfRange {
                count: 201,
                max: 200
            })
        );
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(total_mass(spec(2, 2), 2).unwrap(), count(6));
        assert_eq!(total_mass(spec(2, 2), 0).unwrap(), count(1));
        // C(200,130) cross-checked against an independent exact computation.
        let expected: BigCount = "10181000252388218501926831603222813321973190889192142340"
            .parse()
            .unwrap();
        assert_eq!(total_mass(spec(100, 2), 130).unwrap(), expected);
    }

    #[test]
    fn g_count_examples() {
        for (rows, width) in [(0, 2), (1, 2), (3, 3), (5, 4)] {
            assert_eq!(g_count(rows, width, 0), count(1), "({rows},{width},0)");
        }
        assert_eq!(g_count(1, 2, 1), count(2));
        // C(4,2)=6 selections minus the 2 full rows.
        assert_eq!(g_count(2, 2, 2), count(4));
        // Nothing above rows*(width-1) is selectable without a full row.
        assert_eq!(g_count(3, 2, 4), count(0));
        assert_eq!(g_count(3, 2, 3), count(8)); // 2^3 one-per-row selections
    }

    #[test]
    fn g_count_row_sums_match_closed_form() {
        // Summing over all selection sizes counts subsets with no full row:
        // (2^width - 1) per row, independently.
        for rows in 0..=8u64 {
            for width in 1..=4u64 {
                let sum: BigCount = (0..=rows * (width - 1))
                    .map(|k| g_count(rows, width, k))
                    .sum();
                let expected = count(2u64.pow(width as u32) - 1).pow(rows as u32);
                assert_eq!(sum, expected, "rows={rows} width={width}");
            }
        }
    }

    #[test]
    fn mass_examples_from_brute_force() {
        // All 16 patterns over 2 pair-bundles, tallied by hand.
        assert_eq!(mass(spec(2, 2), 1, 2).unwrap(), count(2));
        assert_eq!(mass(spec(2, 2), 0, 2).unwrap(), count(4));
        // c above the achievable maximum is simply unachievable.
        assert_eq!(mass(spec(5, 2), 3, 5).unwrap(), count(0));
        assert_eq!(
            mass(spec(5, 2), 6, 5),
            Err(ConsistencyError::ConsistencyOutOfRange { count: 6, max: 5 })
        );
    }

    #[test]
    fn general_route_matches_pair_closed_form() {
        for n in 1..=12u64 {
            let s = spec(n, 2);
            for a in 0..=2 * n {
                for c in 0..=n {
                    assert_eq!(
                        mass(s, c, a).unwrap(),
                        mass_general(s, c, a).unwrap(),
                        "n={n} a={a} c={c}"
                    );
                }
            }
        }
    }

    #[test]
    fn distribution_examples() {
        let d = distribution(spec(2, 2), 2).unwrap();
        assert_eq!(d.bounds(), Bounds { min: 0, max: 1 });
        assert_eq!(d.mass(0), count(4));
        assert_eq!(d.mass(1), count(2));
        assert_eq!(d.total(), &count(6));

        let d = distribution(spec(1, 2), 2).unwrap();
        assert_eq!(d.bounds(), Bounds { min: 1, max: 1 });
        assert_eq!(d.mass(1), count(1));
        assert_eq!(d.total(), &count(1));
    }

    #[test]
    fn distribution_mode_sits_inside_the_achievable_range() {
        // Half the instances correct over 100 pair bundles: the bulk of the
        // mass concentrates well away from both endpoints.
        let d = distribution(spec(100, 2), 100).unwrap();
        let (mode, _) = d
            .masses()
            .max_by(|(_, m1), (_, m2)| m1.cmp(m2))
            .unwrap();
        assert!(d.bounds().min < mode && mode < d.bounds().max);
        assert_eq!(mode, 25);
    }

    #[test]
    fn distribution_masses_are_positive_within_bounds() {
        for (n, b) in [(5, 2), (4, 3), (3, 4)] {
            let s = spec(n, b);
            for a in 0..=s.instances() {
                let d = distribution(s, a).unwrap();
                assert!(d.masses().all(|(_, m)| !m.is_zero()), "n={n} b={b} a={a}");
            }
        }
    }

    #[test]
    fn cumulative_mass_examples() {
        assert_eq!(cumulative_mass(spec(2, 2), 0, 2).unwrap(), count(4));
        assert_eq!(cumulative_mass(spec(2, 2), 1, 2).unwrap(), count(6));
        // At or beyond the upper bound the cumulative count is the total.
        for a in 0..=10 {
            let s = spec(5, 2);
            let top = bounds(s, a).unwrap().max;
            assert_eq!(
                cumulative_mass(s, top, a).unwrap(),
                total_mass(s, a).unwrap()
            );
        }
    }

    #[test]
    fn rel_consistency_worked_example() {
        // Expected floats computed independently with exact rational arithmetic.
        let s = spec(100, 2);
        let rc1 = rel_consistency(s, ScorePoint::new(130, 45)).unwrap();
        let rc2 = rel_consistency(s, ScorePoint::new(150, 55)).unwrap();
        assert!((rc1 - 0.9303901511160978).abs() < 1e-12, "rc1={rc1}");
        assert!((rc2 - 0.3706698484941223).abs() < 1e-12, "rc2={rc2}");
        assert_eq!(rel_consistency(s, ScorePoint::new(130, 65)).unwrap(), 1.0);
    }

    #[test]
    fn rel_consistency_small_cases() {
        // Ten-instance toy layouts; percentages verified by direct enumeration.
        let s = spec(5, 2);
        let rc = |a, c| rel_consistency(s, ScorePoint::new(a, c)).unwrap();
        assert_eq!(rc(4, 2), 1.0);
        assert!((rc(7, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rc(7, 3), 1.0);
        assert!((rc(8, 3) - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(rc(8, 4), 1.0);
        // The only achievable consistency at zero accuracy is zero.
        assert_eq!(rc(0, 0), 1.0);
    }

    #[test]
    fn rel_consistency_rejects_infeasible_scores() {
        let s = spec(100, 2);
        assert_eq!(
            rel_consistency(s, ScorePoint::new(130, 29)),
            Err(ConsistencyError::InfeasibleScore {
                correct: 130,
                consistent: 29,
                min: 30,
                max: 65
            })
        );
        assert!(matches!(
            rel_consistency(s, ScorePoint::new(130, 66)),
            Err(ConsistencyError::InfeasibleScore { .. })
        ));
    }

    #[test]
    fn rc_difference_examples() {
        let s = spec(100, 2);
        let same = rc_difference(s, ScorePoint::new(130, 45), s, ScorePoint::new(130, 45)).unwrap();
        assert_eq!(same.ordering, Ordering::Equal);
        assert_eq!(same.difference, 0.0);

        let pair = rc_difference(s, ScorePoint::new(130, 45), s, ScorePoint::new(150, 55)).unwrap();
        assert_eq!(pair.ordering, Ordering::Greater);
        assert!((pair.difference - 0.5597203026219755).abs() < 1e-12);

        // Adjacent consistencies order strictly even when the floats are close.
        let adj = rc_difference(s, ScorePoint::new(100, 40), s, ScorePoint::new(100, 41)).unwrap();
        assert_eq!(adj.ordering, Ordering::Less);
    }

    #[test]
    fn scaled_score_examples() {
        let s = spec(100, 2);
        assert_eq!(scaled_score(s, ScorePoint::new(130, 65)).unwrap(), 1.0);
        assert_eq!(scaled_score(s, ScorePoint::new(130, 30)).unwrap(), 0.0);
        let mid = scaled_score(s, ScorePoint::new(130, 45)).unwrap();
        assert!((mid - 15.0 / 35.0).abs() < 1e-15);
        // Single-point range: the model achieved its maximum.
        assert_eq!(scaled_score(s, ScorePoint::new(0, 0)).unwrap(), 1.0);
    }

    #[test]
    fn partial_correct_score_examples() {
        let s = spec(100, 2);
        assert_eq!(partial_correct_score(s, ScorePoint::new(0, 0)).unwrap(), 1.0);
        assert_eq!(
            partial_correct_score(s, ScorePoint::new(130, 65)).unwrap(),
            1.0
        );
        let mid = partial_correct_score(s, ScorePoint::new(130, 45)).unwrap();
        assert!((mid - 45.0 / 85.0).abs() < 1e-15);
        assert_eq!(
            partial_correct_score(spec(4, 3), ScorePoint::new(6, 1)),
            Err(ConsistencyError::UnsupportedBundleSize { size: 3 })
        );
    }

    #[test]
    fn evaluate_assembles_all_scores() {
        let s = spec(100, 2);
        let result = evaluate(s, ScorePoint::new(130, 45)).unwrap();
        assert_eq!(result.accuracy, 0.65);
        assert_eq!(result.consistency, 0.45);
        assert!((result.rel_consistency - 0.9303901511160978).abs() < 1e-12);
        assert!((result.scaled_score - 15.0 / 35.0).abs() < 1e-15);
        assert!((result.partial_correct_score.unwrap() - 45.0 / 85.0).abs() < 1e-15);

        let top = evaluate(s, ScorePoint::new(130, 65)).unwrap();
        assert_eq!(top.rel_consistency, 1.0);

        let triple = evaluate(spec(4, 3), ScorePoint::new(6, 1)).unwrap();
        assert_eq!(triple.partial_correct_score, None);
    }

    proptest! {
        #[test]
        fn masses_partition_the_total(n in 1u64..=40, b in 2u64..=4, a_frac in 0.0f64..=1.0) {
            let s = spec(n, b);
            let a = (a_frac * s.instances() as f64).round() as u64;
            let d = distribution(s, a).unwrap();
            let sum: BigCount = d.masses().map(|(_, m)| m).sum();
            prop_assert_eq!(&sum, d.total());
            prop_assert_eq!(d.total(), &exact::binomial(s.instances(), a));
        }

        #[test]
        fn pair_specialization_matches_inclusion_exclusion(n in 1u64..=30, a_frac in 0.0f64..=1.0, c_frac in 0.0f64..=1.0) {
            let s = spec(n, 2);
            let a = (a_frac * 2.0 * n as f64).round() as u64;
            let c = (c_frac * n as f64).round() as u64;
            prop_assert_eq!(mass(s, c, a).unwrap(), mass_general(s, c, a).unwrap());
        }

        #[test]
        fn rel_consistency_is_nondecreasing_in_consistency(n in 1u64..=30, b in 2u64..=3, a_frac in 0.0f64..=1.0) {
            let s = spec(n, b);
            let a = (a_frac * s.instances() as f64).round() as u64;
            let d = distribution(s, a).unwrap();
            let mut previous = 0.0;
            for c in d.bounds().range() {
                let rc = d.rel_consistency(c).unwrap();
                prop_assert!(rc >= previous, "rc({c})={rc} < {previous}");
                previous = rc;
            }
            prop_assert_eq!(d.rel_consistency(d.bounds().max).unwrap(), 1.0);
        }

        #[test]
        fn bounds_never_produce_an_empty_range(n in 1u64..=50, b in 2u64..=5, a_frac in 0.0f64..=1.0) {
            let s = spec(n, b);
            let a = (a_frac * s.instances() as f64).round() as u64;
            let bounds = bounds(s, a).unwrap();
            prop_assert!(bounds.min <= a / b);
            prop_assert!(bounds.min <= bounds.max);
            prop_assert!(bounds.max <= n);
        }
    }
}
