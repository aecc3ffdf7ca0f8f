//! Representational similarity matrices over items or respondents, their
//! comparison, and group-level score dispersion.

use crate::ingest::ResponseMatrix;
use crate::scale::ScaleDefinition;
use crate::stats::{mean, pearson_pairwise, sample_sd, spearman, StatsError};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RsaError {
    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("every vector is constant; no similarity is defined")]
    AllConstant,
    #[error("RSMs differ in labels or mode")]
    LabelMismatch,
    #[error("only {defined} upper-triangle cells are defined in both RSMs; need 3")]
    InsufficientCells { defined: usize },
    #[error("need at least 2 respondents with scored cells, got {got}")]
    TooFewRespondents { got: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RsmMode {
    ItemSpace,
    RespondentSpace,
}

impl fmt::Display for RsmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ItemSpace => "item-space",
            Self::RespondentSpace => "respondent-space",
        })
    }
}

/// Symmetric similarity matrix; `None` marks cells involving a constant
/// vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rsm {
    pub group_label: String,
    pub mode: RsmMode,
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Rsm {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Strict upper triangle in row-major order.
    pub fn upper_triangle(&self) -> Vec<Option<f64>> {
        let n = self.size();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| self.values[i][j])
            .collect()
    }
}

fn similarity(vectors: &[Vec<Option<f64>>]) -> Vec<Vec<Option<f64>>> {
    let n = vectors.len();
    let defined: Vec<bool> = vectors
        .iter()
        .map(|v| {
            let vals: Vec<f64> = v.iter().flatten().copied().collect();
            vals.len() >= 2 && vals.iter().any(|x| *x != vals[0])
        })
        .collect();
    let mut out = vec![vec![None; n]; n];
    for i in 0..n {
        if !defined[i] {
            continue;
        }
        out[i][i] = Some(1.0);
        for j in (i + 1)..n {
            if defined[j] {
                let r = pearson_pairwise(&vectors[i], &vectors[j]).ok().map(|c| c.r);
                out[i][j] = r;
                out[j][i] = r;
            }
        }
    }
    out
}

/// Pairwise-complete Pearson similarity between the columns (ItemSpace) or
/// rows (RespondentSpace) of `m`, using raw cell values.
pub fn build_rsm(m: &ResponseMatrix, mode: RsmMode) -> Result<Rsm, RsaError> {
    let (labels, vectors): (Vec<String>, Vec<Vec<Option<f64>>>) = match mode {
        RsmMode::ItemSpace => {
            if m.n() < 3 {
                return Err(RsaError::TooFewObservations { needed: 3, got: m.n() });
            }
            (m.item_ids.clone(), (0..m.k()).map(|j| m.column(j)).collect())
        }
        RsmMode::RespondentSpace => {
            if m.k() < 3 {
                return Err(RsaError::TooFewObservations { needed: 3, got: m.k() });
            }
            (
                m.respondent_ids.clone(),
                (0..m.n()).map(|i| m.row(i).to_vec()).collect(),
            )
        }
    };
    let values = similarity(&vectors);
    if values.iter().enumerate().all(|(i, row)| row[i].is_none()) {
        return Err(RsaError::AllConstant);
    }
    Ok(Rsm {
        group_label: m.group_label.clone(),
        mode,
        labels,
        values,
    })
}

/// Spearman correlation of the strict upper triangles, skipping cells
/// missing in either matrix.
pub fn rsm_compare(a: &Rsm, b: &Rsm) -> Result<f64, RsaError> {
    if a.labels != b.labels || a.mode != b.mode {
        return Err(RsaError::LabelMismatch);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .upper_triangle()
        .into_iter()
        .zip(b.upper_triangle())
        .filter_map(|(p, q)| Some((p?, q?)))
        .unzip();
    if x.len() < 3 {
        return Err(RsaError::InsufficientCells { defined: x.len() });
    }
    Ok(spearman(&x, &y)?.r)
}

/// Dispersion of per-respondent overall percent scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupVariability {
    /// Sample SD (n - 1) of the percent scores.
    pub sd: f64,
    pub mean: f64,
    pub n: usize,
}

/// Per-respondent score is 100 times the mean normalized cell value over
/// that respondent's scored cells; respondents with none are skipped.
pub fn percent_scores(m: &ResponseMatrix, scale: &ScaleDefinition) -> Vec<f64> {
    m.normalized(scale)
        .iter()
        .filter_map(|row| {
            let vals: Vec<f64> = row.iter().flatten().copied().collect();
            (!vals.is_empty()).then(|| 100.0 * mean(&vals))
        })
        .collect()
}

pub fn group_variability(m: &ResponseMatrix, scale: &ScaleDefinition) -> Result<GroupVariability, RsaError> {
    let scores = percent_scores(m, scale);
    if scores.len() < 2 {
        return Err(RsaError::TooFewRespondents { got: scores.len() });
    }
    Ok(GroupVariability {
        sd: sample_sd(&scores),
        mean: mean(&scores),
        n: scores.len(),
    })
}
