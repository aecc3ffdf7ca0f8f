use super::PsychometricsError;
use crate::ingest::ResponseMatrix;
use crate::scale::ScaleDefinition;
use crate::stats::{pearson, CorrelationResult};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Scores of one external instrument, keyed by respondent id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScores {
    pub name: String,
    pub scores: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub instrument: String,
    pub result: CorrelationResult,
}

/// Per-respondent totals of normalized item scores (each item on `[0, 1]`),
/// over respondents with no missing cells.
pub fn respondent_totals(m: &ResponseMatrix, scale: &ScaleDefinition) -> Vec<(String, f64)> {
    let normalized = m.normalized(scale);
    normalized
        .iter()
        .zip(&m.respondent_ids)
        .filter_map(|(row, id)| {
            let total: Option<f64> = row.iter().copied().sum();
            total.map(|t| (id.clone(), t))
        })
        .collect()
}

/// Pearson correlation of scale totals with each external instrument over
/// respondents present in both.
pub fn criterion_validity(
    scale_scores: &[(String, f64)],
    external: &[ExternalScores],
) -> Result<Vec<CriterionResult>, PsychometricsError> {
    external
        .iter()
        .map(|ext| {
            let lookup: HashMap<&str, f64> = ext.scores.iter().map(|(id, v)| (id.as_str(), *v)).collect();
            let (x, y): (Vec<f64>, Vec<f64>) = scale_scores
                .iter()
                .filter_map(|(id, s)| lookup.get(id.as_str()).map(|e| (*s, *e)))
                .unzip();
            if x.len() < 3 {
                return Err(PsychometricsError::NoOverlap {
                    instrument: ext.name.clone(),
                    overlap: x.len(),
                });
            }
            Ok(CriterionResult {
                instrument: ext.name.clone(),
                result: pearson(&x, &y)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[(&str, f64)]) -> Vec<(String, f64)> {
        v.iter().map(|(k, s)| (k.to_string(), *s)).collect()
    }

    #[test]
    fn copy_of_scores_correlates_perfectly() {
        let s = scores(&[("a", 1.0), ("b", 4.0), ("c", 2.0), ("d", 7.0)]);
        let ext = ExternalScores {
            name: "CRT".into(),
            scores: s.iter().rev().cloned().collect(),
        };
        let out = criterion_validity(&s, &[ext]).unwrap();
        assert_eq!(out[0].result.r, 1.0);
        assert_eq!(out[0].result.n, 4);
    }

    #[test]
    fn two_overlapping_respondents_is_no_overlap() {
        let s = scores(&[("a", 1.0), ("b", 4.0), ("c", 2.0)]);
        let ext = ExternalScores {
            name: "DOI".into(),
            scores: scores(&[("a", 1.0), ("b", 2.0), ("z", 3.0)]),
        };
        assert_eq!(
            criterion_validity(&s, &[ext]).unwrap_err(),
            PsychometricsError::NoOverlap {
                instrument: "DOI".into(),
                overlap: 2
            }
        );
    }
}
