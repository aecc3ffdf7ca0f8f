//! Deterministic numeric primitives shared by every analysis module.
//!
//! Everything here is a pure function over immutable inputs, with the
//! exception of [`RngStream`], which is single-owner and forked by deriving
//! child seeds rather than shared.

mod correlation;
mod eigen;
mod rng;
mod special;
mod ttest;

pub use correlation::{pearson, pearson_pairwise, pearson_r, rank_average, spearman, CorrelationResult};
pub use eigen::{sym_eigen, EigenResult};
pub use rng::{mvn_sample, psd_factor, RngStream, PRNG_ALGORITHM};
pub use special::{ln_gamma, regularized_incomplete_beta, student_t_sf, student_t_two_sided};
pub use ttest::{welch_t, TTestResult};

use thiserror::Error;

/// Failures raised by the numeric kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("constant input: correlation undefined for a zero-variance vector")]
    ConstantInput,
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("both groups are constant and equal: t statistic undefined")]
    BothConstantEqual,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("invalid degrees of freedom {0}")]
    InvalidDf(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn sample_sd(x: &[f64]) -> f64 {
    sample_variance(x).sqrt()
}

/// True when every element equals the first one bitwise-exactly.
pub(crate) fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Percentile of an ascending-sorted slice with linear interpolation between
/// closest ranks (`q` in `[0, 100]`).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Rounds to two decimals, half away from zero. Used for reported
/// percentages.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_sorted(&v, 0.0), 1.0);
        assert_eq!(percentile_sorted(&v, 100.0), 5.0);
        assert_eq!(percentile_sorted(&v, 50.0), 3.0);
        assert!((percentile_sorted(&v, 95.0) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn round2_is_odd_symmetric() {
        assert_eq!(round2(48.648_648), 48.65);
        assert_eq!(round2(-48.648_648), -48.65);
        assert_eq!(round2(100.0 * 36.0 / 74.0), 48.65);
    }

    #[test]
    fn variance_uses_n_minus_one() {
        assert_eq!(sample_variance(&[40.0, 60.0]), 200.0);
    }
}
