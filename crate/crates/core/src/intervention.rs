//! Pre/post comparison of prompt conditions: accuracy change with a Welch
//! test over per-run accuracies, and representational/network change.

use crate::ingest::{transcripts_to_matrix, IngestError, ResponseMatrix, TranscriptRecord};
use crate::rsa::{build_rsm, rsm_compare, RsaError, RsmMode};
use crate::scale::{Dimension, ItemFormat, ScaleDefinition};
use crate::sna::{build_network, network_metrics, CognitiveNetwork, SnaError};
use crate::stats::{mean, round2, welch_t, StatsError, TTestResult};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterventionError {
    #[error("{side} transcript set is empty")]
    Empty { side: &'static str },
    #[error("transcripts do not match the scale: {0}")]
    ScaleMismatch(String),
    #[error("{side} has no parsed keyed responses")]
    NoKeyedResponses { side: &'static str },
    #[error("pre and post matrices cover different item sets")]
    ItemSetMismatch,
    #[error(transparent)]
    Rsa(#[from] RsaError),
    #[error(transparent)]
    Sna(#[from] SnaError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyComparison {
    pub pre_accuracy: f64,
    pub post_accuracy: f64,
    /// post - pre, percentage points.
    pub delta: f64,
    pub pre_runs: usize,
    pub post_runs: usize,
    /// Welch test over per-run accuracies; absent with fewer than 2 runs on
    /// either side.
    pub ttest: Option<TTestResult>,
    pub note: Option<String>,
}

fn keyed_columns(m: &ResponseMatrix, scale: &ScaleDefinition) -> Vec<bool> {
    m.item_ids
        .iter()
        .map(|id| {
            scale
                .item(id)
                .is_some_and(|it| matches!(it.format, ItemFormat::MultipleChoice { .. }))
        })
        .collect()
}

/// Overall percent correct (rounded to 2 decimals) and unrounded per-run
/// percentages over parsed keyed cells.
pub fn run_accuracies(m: &ResponseMatrix, scale: &ScaleDefinition) -> Option<(f64, Vec<f64>)> {
    let keyed = keyed_columns(m, scale);
    let (mut correct, mut total) = (0.0, 0usize);
    let mut per_run = Vec::new();
    for r in 0..m.n() {
        let vals: Vec<f64> = m
            .row(r)
            .iter()
            .zip(&keyed)
            .filter(|(_, k)| **k)
            .filter_map(|(v, _)| *v)
            .collect();
        if vals.is_empty() {
            continue;
        }
        correct += vals.iter().sum::<f64>();
        total += vals.len();
        per_run.push(100.0 * mean(&vals));
    }
    (total > 0).then(|| (round2(100.0 * correct / total as f64), per_run))
}

/// Accuracy change between two response matrices whose rows are runs.
pub fn compare_accuracy_matrices(
    pre: &ResponseMatrix,
    post: &ResponseMatrix,
    scale: &ScaleDefinition,
) -> Result<AccuracyComparison, InterventionError> {
    let (pre_acc, pre_runs) = run_accuracies(pre, scale).ok_or(InterventionError::NoKeyedResponses { side: "pre" })?;
    let (post_acc, post_runs) =
        run_accuracies(post, scale).ok_or(InterventionError::NoKeyedResponses { side: "post" })?;
    let (ttest, note) = if pre_runs.len() < 2 || post_runs.len() < 2 {
        (
            None,
            Some(format!(
                "TooFewRuns: t-test needs at least 2 runs per condition (pre {}, post {})",
                pre_runs.len(),
                post_runs.len()
            )),
        )
    } else {
        match welch_t(&post_runs, &pre_runs) {
            Ok(t) => (Some(t), None),
            Err(StatsError::BothConstantEqual) => (
                Some(TTestResult {
                    t: 0.0,
                    df: (pre_runs.len() + post_runs.len() - 2) as f64,
                    p: 1.0,
                }),
                Some("per-run accuracies are constant and equal across conditions".into()),
            ),
            Err(e) => return Err(e.into()),
        }
    };
    Ok(AccuracyComparison {
        pre_accuracy: pre_acc,
        post_accuracy: post_acc,
        delta: round2(post_acc - pre_acc),
        pre_runs: pre_runs.len(),
        post_runs: post_runs.len(),
        ttest,
        note,
    })
}

fn to_matrix(
    records: &[TranscriptRecord],
    scale: &ScaleDefinition,
    side: &'static str,
) -> Result<ResponseMatrix, InterventionError> {
    if records.is_empty() {
        return Err(InterventionError::Empty { side });
    }
    transcripts_to_matrix(records, scale, side).map_err(|e| match e {
        IngestError::UnknownItemColumn(id) => {
            InterventionError::ScaleMismatch(format!("item '{id}' is not in the scale"))
        }
        other => InterventionError::ScaleMismatch(other.to_string()),
    })
}

/// Accuracy change between two transcript sets; each run is one replicate.
pub fn compare_accuracy(
    pre: &[TranscriptRecord],
    post: &[TranscriptRecord],
    scale: &ScaleDefinition,
) -> Result<AccuracyComparison, InterventionError> {
    let pre_m = to_matrix(pre, scale, "pre")?;
    let post_m = to_matrix(post, scale, "post")?;
    compare_accuracy_matrices(&pre_m, &post_m, scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDeltas {
    pub avg_connectivity: f64,
    pub hot_cold_integration: Option<f64>,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralChange {
    pub rsm_similarity: f64,
    pub network_deltas: NetworkDeltas,
    /// Isolated before and not isolated after.
    pub isolation_resolved: BTreeMap<Dimension, bool>,
}

/// Metric differences (post - pre) and per-node isolation resolution.
pub fn compare_networks(
    pre: &CognitiveNetwork,
    post: &CognitiveNetwork,
    isolation_threshold: f64,
    density_threshold: f64,
) -> Result<(NetworkDeltas, BTreeMap<Dimension, bool>), InterventionError> {
    let a = network_metrics(pre, isolation_threshold, density_threshold)?;
    let b = network_metrics(post, isolation_threshold, density_threshold)?;
    let deltas = NetworkDeltas {
        avg_connectivity: b.avg_connectivity - a.avg_connectivity,
        hot_cold_integration: match (a.hot_cold_integration, b.hot_cold_integration) {
            (Some(x), Some(y)) => Some(y - x),
            _ => None,
        },
        density: b.density - a.density,
    };
    let resolved = pre
        .nodes
        .iter()
        .map(|d| (*d, a.isolated.contains(d) && !b.isolated.contains(d)))
        .collect();
    Ok((deltas, resolved))
}

pub fn compare_structures(
    pre: &ResponseMatrix,
    post: &ResponseMatrix,
    scale: &ScaleDefinition,
    isolation_threshold: f64,
    density_threshold: f64,
) -> Result<StructuralChange, InterventionError> {
    let a: BTreeSet<&String> = pre.item_ids.iter().collect();
    let b: BTreeSet<&String> = post.item_ids.iter().collect();
    if a != b {
        return Err(InterventionError::ItemSetMismatch);
    }
    let post = if post.item_ids == pre.item_ids {
        post.clone()
    } else {
        post.select_items(&pre.item_ids)
            .map_err(|_| InterventionError::ItemSetMismatch)?
    };
    let rsm_similarity = rsm_compare(
        &build_rsm(pre, RsmMode::ItemSpace)?,
        &build_rsm(&post, RsmMode::ItemSpace)?,
    )?;
    let (network_deltas, isolation_resolved) = compare_networks(
        &build_network(pre, scale)?,
        &build_network(&post, scale)?,
        isolation_threshold,
        density_threshold,
    )?;
    Ok(StructuralChange {
        rsm_similarity,
        network_deltas,
        isolation_resolved,
    })
}

/// Full pre/post summary for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionReport {
    pub model: String,
    pub pre_condition: String,
    pub post_condition: String,
    pub accuracy: AccuracyComparison,
    /// Replicate unit of the t-test.
    pub ttest_unit: String,
    pub structures: Option<StructuralChange>,
    pub structures_error: Option<String>,
}
