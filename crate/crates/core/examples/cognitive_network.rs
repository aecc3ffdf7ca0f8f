//! Dimension-level network: edge weights, centrality, dominant core and
//! isolated modules.
//!
//! cargo run --example cognitive_network

use cogalign::scale::demo_scale;
use cogalign::sna::{build_network, classify_structure, network_metrics};
use cogalign::synthgen::{gen_population, PopulationSpec};
use nalgebra::DMatrix;

fn main() {
    let scale = demo_scale();
    let mut spec = PopulationSpec::new("human", 2000, 5);
    // Calculation correlates with everything, Information with nothing
    spec.factor_correlations = DMatrix::from_fn(5, 5, |i, j| match (i.min(j), i.max(j)) {
        _ if i == j => 1.0,
        _ if i == 2 || j == 2 => 0.0,
        (0, _) => 0.55,
        _ => 0.1,
    });
    let m = gen_population(&spec, &scale).unwrap();
    let net = build_network(&m, &scale).unwrap();
    for e in &net.edges {
        println!(
            "{:?} -- {:?}: {:?}",
            e.a,
            e.b,
            e.weight.map(|w| (w * 1000.0).round() / 1000.0)
        );
    }

    let metrics = network_metrics(&net, 0.05, 0.1).unwrap();
    println!(
        "avg connectivity {:.3}, density {:.2}",
        metrics.avg_connectivity, metrics.density
    );
    for (node, c) in &metrics.centrality {
        println!("  {node:?}: {c:.3}");
    }
    let class = classify_structure(&metrics);
    println!(
        "dominant core {:?}, isolated {:?}",
        class.dominant_core, class.isolated_modules
    );
}
