//! Cognitive networks over the bias dimensions: edge weights are
//! inter-dimensional correlations of respondent dimension scores.

use crate::ingest::ResponseMatrix;
use crate::scale::{Dimension, ScaleDefinition, SystemTag};
use crate::stats::{mean, pearson_pairwise};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_ISOLATION_THRESHOLD: f64 = 0.05;
pub const DEFAULT_DENSITY_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnaError {
    #[error("dimension {0} has no items in the response matrix")]
    MissingDimension(Dimension),
    #[error("need at least 3 respondents, got {0}")]
    TooFewRespondents(usize),
    #[error("network has no defined edges")]
    NoDefinedEdges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge<N> {
    pub a: N,
    pub b: N,
    /// `None` when either endpoint's scores are constant.
    pub weight: Option<f64>,
}

/// Undirected weighted graph with one edge slot per unordered node pair,
/// ordered `(0,1), (0,2), ..., (n-2,n-1)` by node position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveNetwork<N: Ord = Dimension> {
    pub group_label: String,
    pub nodes: Vec<N>,
    pub edges: Vec<Edge<N>>,
    pub partition: BTreeMap<N, SystemTag>,
}

impl<N: Ord + Clone> CognitiveNetwork<N> {
    /// Network over `nodes` with the given weights; pairs not listed are
    /// missing.
    pub fn from_weights(
        group_label: impl Into<String>,
        nodes: Vec<N>,
        weights: &[(N, N, f64)],
        partition: BTreeMap<N, SystemTag>,
    ) -> Self {
        let n = nodes.len();
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let weight = weights
                    .iter()
                    .find(|(a, b, _)| (a == &nodes[i] && b == &nodes[j]) || (a == &nodes[j] && b == &nodes[i]))
                    .map(|(_, _, w)| *w);
                edges.push(Edge {
                    a: nodes[i].clone(),
                    b: nodes[j].clone(),
                    weight,
                });
            }
        }
        Self {
            group_label: group_label.into(),
            nodes,
            edges,
            partition,
        }
    }

    pub fn weight(&self, a: &N, b: &N) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| (&e.a == a && &e.b == b) || (&e.a == b && &e.b == a))
            .and_then(|e| e.weight)
    }
}

/// Per-respondent dimension scores: mean normalized value over the
/// dimension's answered items, `None` if none were answered.
pub fn dimension_scores(m: &ResponseMatrix, scale: &ScaleDefinition) -> BTreeMap<Dimension, Vec<Option<f64>>> {
    let normalized = m.normalized(scale);
    let dims: Vec<Option<Dimension>> = m
        .item_ids
        .iter()
        .map(|id| scale.item(id).map(|it| it.dimension))
        .collect();
    Dimension::ALL
        .iter()
        .map(|&d| {
            let scores = normalized
                .iter()
                .map(|row| {
                    let vals: Vec<f64> = row
                        .iter()
                        .zip(&dims)
                        .filter(|(_, dim)| **dim == Some(d))
                        .filter_map(|(v, _)| *v)
                        .collect();
                    (!vals.is_empty()).then(|| mean(&vals))
                })
                .collect();
            (d, scores)
        })
        .collect()
}

pub fn build_network(m: &ResponseMatrix, scale: &ScaleDefinition) -> Result<CognitiveNetwork, SnaError> {
    for d in Dimension::ALL {
        let has = m
            .item_ids
            .iter()
            .any(|id| scale.item(id).is_some_and(|it| it.dimension == d));
        if !has {
            return Err(SnaError::MissingDimension(d));
        }
    }
    if m.n() < 3 {
        return Err(SnaError::TooFewRespondents(m.n()));
    }
    let scores = dimension_scores(m, scale);
    let nodes = Dimension::ALL.to_vec();
    let mut weights = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if let Ok(c) = pearson_pairwise(&scores[a], &scores[b]) {
                weights.push((*a, *b, c.r));
            }
        }
    }
    Ok(CognitiveNetwork::from_weights(
        m.group_label.clone(),
        nodes,
        &weights,
        scale.hot_cold_partition.clone(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics<N = Dimension> {
    /// Mean |w| over defined edges.
    pub avg_connectivity: f64,
    /// Strength centrality (sum of incident |w|) in node order.
    pub centrality: Vec<(N, f64)>,
    /// Share of all node pairs with |w| >= density threshold.
    pub density: f64,
    /// Mean |w| over defined edges joining a Hot and a Cold node.
    pub hot_cold_integration: Option<f64>,
    pub dominant_core: N,
    pub isolated: Vec<N>,
    pub defined_edges: usize,
    pub isolation_threshold: f64,
    pub density_threshold: f64,
}

pub fn network_metrics<N: Ord + Clone>(
    net: &CognitiveNetwork<N>,
    isolation_threshold: f64,
    density_threshold: f64,
) -> Result<NetworkMetrics<N>, SnaError> {
    let defined: Vec<(&Edge<N>, f64)> = net
        .edges
        .iter()
        .filter_map(|e| e.weight.map(|w| (e, w.abs())))
        .collect();
    if defined.is_empty() {
        return Err(SnaError::NoDefinedEdges);
    }
    let avg_connectivity = defined.iter().map(|(_, w)| w).sum::<f64>() / defined.len() as f64;

    let incident = |node: &N| -> Vec<f64> {
        defined
            .iter()
            .filter(|(e, _)| &e.a == node || &e.b == node)
            .map(|(_, w)| *w)
            .collect()
    };
    let centrality: Vec<(N, f64)> = net
        .nodes
        .iter()
        .map(|n| (n.clone(), incident(n).iter().sum()))
        .collect();

    let pairs = net.nodes.len() * (net.nodes.len() - 1) / 2;
    let dense = defined.iter().filter(|(_, w)| *w >= density_threshold).count();
    let density = dense as f64 / pairs as f64;

    let crossing: Vec<f64> = defined
        .iter()
        .filter(|(e, _)| match (net.partition.get(&e.a), net.partition.get(&e.b)) {
            (Some(x), Some(y)) => x != y,
            _ => false,
        })
        .map(|(_, w)| *w)
        .collect();
    let hot_cold_integration = (!crossing.is_empty()).then(|| mean(&crossing));

    let mut dominant = &centrality[0];
    for c in &centrality[1..] {
        if c.1 > dominant.1 {
            dominant = c;
        }
    }
    let isolated = net
        .nodes
        .iter()
        .filter(|n| incident(n).iter().all(|w| *w < isolation_threshold))
        .cloned()
        .collect();

    Ok(NetworkMetrics {
        avg_connectivity,
        dominant_core: dominant.0.clone(),
        centrality,
        density,
        hot_cold_integration,
        isolated,
        defined_edges: defined.len(),
        isolation_threshold,
        density_threshold,
    })
}

/// One row of the core/isolation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureClass {
    pub dominant_core: Dimension,
    pub isolated_modules: Vec<Dimension>,
    pub information_isolated: bool,
}

pub fn classify_structure(metrics: &NetworkMetrics<Dimension>) -> StructureClass {
    StructureClass {
        dominant_core: metrics.dominant_core,
        isolated_modules: metrics.isolated.clone(),
        information_isolated: metrics.isolated.contains(&Dimension::Information),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> CognitiveNetwork<&'static str> {
        let partition = [("A", SystemTag::Hot), ("B", SystemTag::Cold), ("C", SystemTag::Cold)]
            .into_iter()
            .collect();
        CognitiveNetwork::from_weights(
            "fixture",
            vec!["A", "B", "C"],
            &[("A", "B", 0.6), ("A", "C", 0.2), ("B", "C", 0.0)],
            partition,
        )
    }

    #[test]
    fn three_node_fixture() {
        let m = network_metrics(&fixture(), 0.05, 0.1).unwrap();
        assert!((m.avg_connectivity - 0.8 / 3.0).abs() < 1e-12);
        let s: Vec<f64> = m.centrality.iter().map(|c| c.1).collect();
        assert!((s[0] - 0.8).abs() < 1e-12 && (s[1] - 0.6).abs() < 1e-12 && (s[2] - 0.2).abs() < 1e-12);
        assert_eq!(m.dominant_core, "A");
        assert!((m.density - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.hot_cold_integration.unwrap() - 0.4).abs() < 1e-12);
        assert!(m.isolated.is_empty());
    }

    #[test]
    fn zero_weights_isolate_everything() {
        let net = CognitiveNetwork::from_weights(
            "z",
            vec!["A", "B", "C"],
            &[("A", "B", 0.0), ("A", "C", 0.0), ("B", "C", 0.0)],
            BTreeMap::new(),
        );
        let m = network_metrics(&net, 1e-9, 0.1).unwrap();
        assert_eq!(m.avg_connectivity, 0.0);
        assert_eq!(m.isolated, vec!["A", "B", "C"]);
        assert_eq!(m.dominant_core, "A");
        assert_eq!(m.hot_cold_integration, None);
    }

    #[test]
    fn no_defined_edges_is_an_error() {
        let net = CognitiveNetwork::from_weights("e", vec!["A", "B"], &[], BTreeMap::new());
        assert_eq!(network_metrics(&net, 0.05, 0.1), Err(SnaError::NoDefinedEdges));
    }

    #[test]
    fn classification_flags_information() {
        let m = NetworkMetrics {
            avg_connectivity: 0.1,
            centrality: vec![],
            density: 0.5,
            hot_cold_integration: None,
            dominant_core: Dimension::Social,
            isolated: vec![Dimension::Information],
            defined_edges: 10,
            isolation_threshold: 0.05,
            density_threshold: 0.1,
        };
        assert!(classify_structure(&m).information_isolated);
        let none = NetworkMetrics { isolated: vec![], ..m };
        let c = classify_structure(&none);
        assert!(!c.information_isolated);
        assert_eq!(c.dominant_core, Dimension::Social);
    }
}
