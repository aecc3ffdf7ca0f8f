use super::{complete_data, PsychometricsError};
use crate::ingest::ResponseMatrix;
use crate::stats::{pearson_r, sample_variance};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDiagnostic {
    pub item_id: String,
    /// Correlation of the item with the total of the remaining items.
    pub corrected_item_total_r: Option<f64>,
    /// Undefined when fewer than two items would remain.
    pub alpha_if_deleted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub alpha: f64,
    pub k: usize,
    /// Complete rows used.
    pub n: usize,
    pub per_item: Vec<ItemDiagnostic>,
}

fn column(x: &DMatrix<f64>, j: usize) -> Vec<f64> {
    x.column(j).iter().copied().collect()
}

/// Variance-form Cronbach's alpha of an n×k data matrix (rows are
/// respondents).
pub fn cronbach_alpha_matrix(x: &DMatrix<f64>) -> Result<f64, PsychometricsError> {
    let (n, k) = x.shape();
    if k < 2 {
        return Err(PsychometricsError::TooFewItems { needed: 2, got: k });
    }
    if n < 2 {
        return Err(PsychometricsError::TooFewRespondents { needed: 2, got: n });
    }
    let item_var: f64 = (0..k).map(|j| sample_variance(&column(x, j))).sum();
    let totals: Vec<f64> = x.row_iter().map(|r| r.sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var == 0.0 || totals.iter().all(|t| *t == totals[0]) {
        return Err(PsychometricsError::ZeroTotalVariance);
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - item_var / total_var))
}

/// Covariance form `(k/(k-1))(1 - tr(C)/1'C1)`; algebraically identical to
/// the variance form.
pub fn alpha_covariance_form(x: &DMatrix<f64>) -> Result<f64, PsychometricsError> {
    let (n, k) = x.shape();
    if k < 2 {
        return Err(PsychometricsError::TooFewItems { needed: 2, got: k });
    }
    if n < 2 {
        return Err(PsychometricsError::TooFewRespondents { needed: 2, got: n });
    }
    let means = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let c = centered.transpose() * &centered / (n as f64 - 1.0);
    let sum = c.sum();
    if sum == 0.0 {
        return Err(PsychometricsError::ZeroTotalVariance);
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - c.trace() / sum))
}

/// Cronbach's alpha over the complete rows of `m`, with corrected
/// item-total correlations and alpha-if-item-deleted.
pub fn cronbach_alpha(m: &ResponseMatrix) -> Result<ReliabilityReport, PsychometricsError> {
    let x = complete_data(m);
    let alpha = cronbach_alpha_matrix(&x)?;
    let k = x.ncols();
    let totals: Vec<f64> = x.row_iter().map(|r| r.sum()).collect();
    let per_item = (0..k)
        .map(|j| {
            let item = column(&x, j);
            let rest: Vec<f64> = totals.iter().zip(&item).map(|(t, v)| t - v).collect();
            let alpha_if_deleted = if k > 2 {
                cronbach_alpha_matrix(&x.clone().remove_column(j)).ok()
            } else {
                None
            };
            ItemDiagnostic {
                item_id: m.item_ids[j].clone(),
                corrected_item_total_r: pearson_r(&item, &rest).ok(),
                alpha_if_deleted,
            }
        })
        .collect();
    Ok(ReliabilityReport {
        alpha,
        k,
        n: x.nrows(),
        per_item,
    })
}
