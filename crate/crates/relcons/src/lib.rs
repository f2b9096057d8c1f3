//! Contrast-set consistency scoring with exact combinatorial arithmetic.
//!
//! A model evaluated on bundles of related test instances gets an accuracy
//! (correct instances) and a consistency (bundles answered fully correctly).
//! Not every consistency is achievable at a given accuracy, and the achievable
//! ones are not equally likely for a randomly behaving model. This crate
//! computes the exact distribution of achievable consistencies and the
//! *relative consistency*: the probability that a uniformly random, equally
//! accurate model would be at most as consistent as the observed one.
//!
//! Modules:
//! - [`exact`]: big-integer binomials and one-division probability ratios
//! - [`consistency`]: achievable bounds, pattern counts, distributions, scores
//! - [`oracle`]: brute-force enumeration and seeded sampling cross-checks
//! - [`ingest`]: JSONL prediction files grouped into bundle strata
//! - [`report`]: percentage-based replication, comparisons, and CSV grids

pub mod consistency;
pub mod exact;
pub mod ingest;
pub mod oracle;
pub mod report;

pub use consistency::{
    bounds, cumulative_mass, distribution, evaluate, g_count, mass, mass_general,
    partial_correct_score, rc_difference, rel_consistency, scaled_score, total_mass, Bounds,
    BundleSpec, ConsistencyDistribution, ConsistencyError, EvalResult, RcDifference, ScorePoint,
};
pub use exact::{binomial, compare_ratios, BigCount, FactorialTable, MassRatio, RatioComparison};
