//! Exact big-integer combinatorics and numerically careful probability ratios.
//!
//! Every count in this crate is an exact arbitrary-precision integer; floating
//! point enters only at the very end, through [`MassRatio::to_unit_f64`], which
//! performs a single rounding division. Orderings between ratios are decided by
//! exact cross-multiplication, never by subtracting floats.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Exact nonnegative pattern count.
pub type BigCount = BigUint;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RatioError {
    #[error("ratio denominator must be positive")]
    ZeroDenominator,
    #[error("ratio numerator {numerator} exceeds denominator {denominator}")]
    NumeratorExceedsDenominator {
        numerator: BigCount,
        denominator: BigCount,
    },
}

/// C(n, k), exactly. Returns 0 when k > n (and k below 0 is unrepresentable).
pub fn binomial(n: u64, k: u64) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    let k = k.min(n - k);
    let mut result = BigCount::one();
    for i in 0..k {
        result *= n - i;
        // C(n, i+1) is an integer, so this division is exact.
        result /= i + 1;
    }
    result
}

/// Factorials 0..=max, memoized for repeated binomial queries.
///
/// Built once, immutable afterwards; shared freely across threads.
#[derive(Debug, Clone)]
pub struct FactorialTable {
    facts: Vec<BigCount>,
}

impl FactorialTable {
    pub fn new(max: u64) -> Self {
        let mut facts = Vec::with_capacity(max as usize + 1);
        facts.push(BigCount::one());
        for i in 1..=max {
            let next = facts.last().expect("table is non-empty") * i;
            facts.push(next);
        }
        Self { facts }
    }

    pub fn max_n(&self) -> u64 {
        (self.facts.len() - 1) as u64
    }

    /// n!, for n up to the table size.
    pub fn factorial(&self, n: u64) -> &BigCount {
        &self.facts[n as usize]
    }

    /// C(n, k) from the memoized factorials.
    ///
    /// Panics if n exceeds the table size.
    pub fn binomial(&self, n: u64, k: u64) -> BigCount {
        assert!(
            n <= self.max_n(),
            "binomial({n}, {k}) exceeds factorial table sized for {}",
            self.max_n()
        );
        if k > n {
            return BigCount::zero();
        }
        let denom = &self.facts[k as usize] * &self.facts[(n - k) as usize];
        &self.facts[n as usize] / denom
    }
}

/// An exact probability held as a pair of integer counts, divided only on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassRatio {
    numerator: BigCount,
    denominator: BigCount,
}

impl MassRatio {
    pub fn new(numerator: BigCount, denominator: BigCount) -> Result<Self, RatioError> {
        if denominator.is_zero() {
            return Err(RatioError::ZeroDenominator);
        }
        if numerator > denominator {
            return Err(RatioError::NumeratorExceedsDenominator {
                numerator,
                denominator,
            });
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn numerator(&self) -> &BigCount {
        &self.numerator
    }

    pub fn denominator(&self) -> &BigCount {
        &self.denominator
    }

    /// Evaluate the ratio in [0, 1] with a single rounding division.
    ///
    /// When both counts fit in f64 this is one floating division. Counts larger
    /// than f64 can represent fall back to one exact integer division of the
    /// numerator shifted left far enough to keep 64 significant quotient bits;
    /// the closing power-of-two rescale is exact, so either path rounds once.
    pub fn to_unit_f64(&self) -> f64 {
        if self.numerator.is_zero() {
            return 0.0;
        }
        let n = self.numerator.to_f64().unwrap_or(f64::INFINITY);
        let d = self.denominator.to_f64().unwrap_or(f64::INFINITY);
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
        let shift = self.denominator.bits() - self.numerator.bits() + 64;
        let quotient = (&self.numerator << shift) / &self.denominator;
        let q = quotient.to_f64().unwrap_or(0.0);
        q * 2f64.powi(-(shift as i32))
    }

    /// log10 of the ratio, or None when the numerator is zero.
    pub fn log10(&self) -> Option<f64> {
        if self.numerator.is_zero() {
            return None;
        }
        Some(log10_big(&self.numerator) - log10_big(&self.denominator))
    }
}

fn log10_big(value: &BigCount) -> f64 {
    let bits = value.bits();
    if bits <= 64 {
        return value.to_f64().expect("fits in f64").log10();
    }
    let shift = bits - 64;
    let top = (value >> shift).to_f64().expect("64-bit prefix fits in f64");
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// Outcome of an exact comparison of two ratios.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioComparison {
    pub ordering: Ordering,
    /// Exact signed value of n1*d2 - n2*d1, the cross-multiplied difference.
    pub cross_difference: BigInt,
}

/// Order two ratios by exact cross-multiplication, never by floating subtraction.
pub fn compare_ratios(lhs: &MassRatio, rhs: &MassRatio) -> RatioComparison {
    let left = BigInt::from(&lhs.numerator * &rhs.denominator);
    let right = BigInt::from(&rhs.numerator * &lhs.denominator);
    let cross_difference = left - right;
    let ordering = match cross_difference.sign() {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    };
    RatioComparison {
        ordering,
        cross_difference,
    }
}
