//! Scale validation battery: reliability, factor retention and extraction,
//! confirmatory fit, classical MDS and criterion validity.
//!
//! Analyses that need a complete data matrix use listwise deletion over the
//! response matrix (rows with any missing cell are dropped).

mod cfa;
mod factor;
mod mds;
mod reliability;
mod validity;

pub use cfa::{cfa, cfa_from_correlation, CfaEstimates, CfaResult, FactorMapping, FitIndices};
pub use factor::{efa, parallel_analysis, varimax, FactorSolution, ParallelAnalysis, Rotation};
pub use mds::{classical_mds, correlation_distance, MdsResult};
pub use reliability::{
    alpha_covariance_form, cronbach_alpha, cronbach_alpha_matrix, ItemDiagnostic, ReliabilityReport,
};
pub use validity::{criterion_validity, respondent_totals, CriterionResult, ExternalScores};

use crate::ingest::ResponseMatrix;
use crate::stats::StatsError;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsychometricsError {
    #[error("too few items: need at least {needed}, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("too few complete respondents: need at least {needed}, got {got}")]
    TooFewRespondents { needed: usize, got: usize },
    #[error("total-score variance is zero")]
    ZeroTotalVariance,
    #[error("correlation matrix is degenerate: item '{item_id}' is constant")]
    DegenerateCorrelationMatrix { item_id: String },
    #[error("requested {requested} factors for {items} items")]
    TooManyFactors { requested: usize, items: usize },
    #[error("parallel analysis needs at least 100 simulations, got {0}")]
    TooFewSimulations(usize),
    #[error("sample correlation matrix is not positive definite")]
    NonPositiveDefiniteS,
    #[error("model is not identified: df = {df}")]
    UnidentifiedModel { df: i64 },
    #[error("invalid factor mapping: {0}")]
    InvalidMapping(String),
    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),
    #[error("instrument '{instrument}' overlaps on {overlap} respondents; at least 3 required")]
    NoOverlap { instrument: String, overlap: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Complete rows of `m` as an n×k matrix of raw scores.
pub fn complete_data(m: &ResponseMatrix) -> DMatrix<f64> {
    let rows = m.complete_rows();
    DMatrix::from_fn(rows.len(), m.k(), |i, j| m.get(rows[i], j).expect("complete row"))
}

/// Pearson correlation matrix of the columns of `x`. Returns the index of the
/// first constant column as the error.
pub(crate) fn column_correlations(x: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let (n, k) = x.shape();
    let mut z = x.clone();
    for j in 0..k {
        let col = x.column(j);
        if col.iter().all(|v| *v == col[0]) {
            return Err(j);
        }
        let mean = col.sum() / n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            let d = x[(i, j)] - mean;
            z[(i, j)] = d;
            ss += d * d;
        }
        let norm = ss.sqrt();
        z.column_mut(j).unscale_mut(norm);
    }
    let mut r = z.transpose() * &z;
    for i in 0..k {
        r[(i, i)] = 1.0;
        for j in 0..i {
            let v = (0.5 * (r[(i, j)] + r[(j, i)])).clamp(-1.0, 1.0);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}

/// Item correlation matrix over complete rows, with the number of rows used.
pub fn item_correlations(m: &ResponseMatrix) -> Result<(DMatrix<f64>, usize), PsychometricsError> {
    let x = complete_data(m);
    if x.nrows() < 3 {
        return Err(PsychometricsError::TooFewRespondents {
            needed: 3,
            got: x.nrows(),
        });
    }
    let r = column_correlations(&x).map_err(|j| PsychometricsError::DegenerateCorrelationMatrix {
        item_id: m.item_ids[j].clone(),
    })?;
    Ok((r, x.nrows()))
}
