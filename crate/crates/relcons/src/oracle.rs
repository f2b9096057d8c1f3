//! Independent cross-checks for the closed-form counts: exhaustive enumeration
//! of every response pattern for tiny test sets, and seeded uniform sampling
//! at a fixed accuracy for sizes where enumeration is out of reach.
//!
//! Nothing here calls into the closed-form mass computations; that is the
//! point. Tests and the `verify` subcommand compare the two sides.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::consistency::{BundleSpec, ConsistencyError};

/// Enumeration is capped at 2^24 patterns.
pub const ENUMERATION_CAP: u64 = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration over {instances} instances exceeds the {cap}-instance cap")]
    EnumerationTooLarge { instances: u64, cap: u64 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Spec(#[from] ConsistencyError),
}

/// Exhaustive tally of every response pattern, keyed by (correct, consistent).
#[derive(Debug, Clone)]
pub struct PatternCensus {
    spec: BundleSpec,
    counts: BTreeMap<(u64, u64), u64>,
}

impl PatternCensus {
    pub fn spec(&self) -> BundleSpec {
        self.spec
    }

    /// Patterns with exactly this accuracy and consistency.
    pub fn count(&self, correct: u64, consistent: u64) -> u64 {
        self.counts.get(&(correct, consistent)).copied().unwrap_or(0)
    }

    /// Patterns with exactly this accuracy, summed over consistencies.
    pub fn accuracy_marginal(&self, correct: u64) -> u64 {
        self.counts
            .iter()
            .filter(|((a, _), _)| *a == correct)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u64, u64)> + '_ {
        self.counts.iter().map(|(&(a, c), &n)| (a, c, n))
    }

    pub fn total_patterns(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Walk all 2^(nb) correctness patterns and tally (accuracy, consistency).
pub fn enumerate_counts(spec: BundleSpec) -> Result<PatternCensus, OracleError> {
    let instances = spec.instances();
    if instances > ENUMERATION_CAP {
        return Err(OracleError::EnumerationTooLarge {
            instances,
            cap: ENUMERATION_CAP,
        });
    }
    let bundle_size = spec.bundle_size() as u32;
    let bundle_masks: Vec<u32> = (0..spec.bundles() as u32)
        .map(|i| ((1u32 << bundle_size) - 1) << (i * bundle_size))
        .collect();
    let mut counts = BTreeMap::new();
    for pattern in 0u32..(1u32 << instances) {
        let correct = u64::from(pattern.count_ones());
        let consistent = bundle_masks
            .iter()
            .filter(|&&mask| pattern & mask == mask)
            .count() as u64;
        *counts.entry((correct, consistent)).or_insert(0u64) += 1;
    }
    Ok(PatternCensus { spec, counts })
}

/// Tallies of consistencies drawn at a fixed accuracy.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    spec: BundleSpec,
    correct: u64,
    samples: u64,
    seed: u64,
    tallies: BTreeMap<u64, u64>,
}

impl EmpiricalDistribution {
    pub fn spec(&self) -> BundleSpec {
        self.spec
    }

    pub fn correct(&self) -> u64 {
        self.correct
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tallies(&self) -> &BTreeMap<u64, u64> {
        &self.tallies
    }

    /// Empirical CDF: fraction of draws with consistency at most `consistent`.
    pub fn cdf(&self, consistent: u64) -> f64 {
        let below: u64 = self
            .tallies
            .range(..=consistent)
            .map(|(_, tally)| tally)
            .sum();
        below as f64 / self.samples as f64
    }
}

/// Draw `samples` response patterns uniformly among those with exactly
/// `correct` correct instances, and tally the consistency of each.
///
/// Each draw picks a uniformly random size-`correct` subset of the instances
/// (ChaCha8 stream seeded with `seed_from_u64`), so identical seeds reproduce
/// identical tallies. Sharded runs can derive per-shard seeds and merge
/// tallies by addition.
pub fn sample_consistency(
    spec: BundleSpec,
    correct: u64,
    samples: u64,
    seed: u64,
) -> Result<EmpiricalDistribution, OracleError> {
    if correct > spec.instances() {
        return Err(OracleError::Spec(ConsistencyError::AccuracyOutOfRange {
            count: correct,
            max: spec.instances(),
        }));
    }
    if samples == 0 {
        return Err(OracleError::NoSamples);
    }
    let instances = spec.instances() as usize;
    let bundle_size = spec.bundle_size() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flags = vec![false; instances];
    let mut tallies = BTreeMap::new();
    for _ in 0..samples {
        flags.fill(false);
        for index in rand::seq::index::sample(&mut rng, instances, correct as usize) {
            flags[index] = true;
        }
        let consistent = flags
            .chunks_exact(bundle_size)
            .filter(|bundle| bundle.iter().all(|&hit| hit))
            .count() as u64;
        *tallies.entry(consistent).or_insert(0u64) += 1;
    }
    Ok(EmpiricalDistribution {
        spec,
        correct,
        samples,
        seed,
        tallies,
    })
}
