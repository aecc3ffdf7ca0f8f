//! End-to-end run from a configuration file: load the golden fixtures,
//! analyze every group and write all report formats to a temp directory.
//!
//! cargo run --release --example full_report

use cogalign::pipeline::{run_pipeline, RunConfig};
use cogalign::report::{emit_report, parse_formats};
use std::path::Path;

fn main() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden/analyze.toml");
    let cfg = RunConfig::from_file(&config).unwrap();
    let report = run_pipeline(&cfg).unwrap();

    for g in &report.groups {
        let alpha = g.reliability.as_ref().map(|r| r.alpha);
        let core = g.metrics.as_ref().map(|m| m.dominant_core);
        println!(
            "{:>9}: n {:>3}, alpha {:?}, core {:?}, errors {}",
            g.label,
            g.n,
            alpha,
            core,
            g.errors.len()
        );
    }
    for c in &report.cross_group.rsm_compare {
        println!("{c:?}");
    }

    let out = std::env::temp_dir().join("cogalign-full-report");
    let manifest = emit_report(&report, &parse_formats("json,csv,svg-heatmap,dot-graph").unwrap(), &out).unwrap();
    for m in manifest {
        println!("{}\t{}", m.kind, out.join(&m.path).display());
    }
}
