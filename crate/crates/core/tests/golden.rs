//! Golden-report regression over the committed fixture set. Regenerate the
//! expected file with `COGALIGN_UPDATE_GOLDEN=1 cargo test --test golden`.

mod common;

use cogalign::pipeline::{run_pipeline, RunConfig};
use cogalign::report::to_report_json;
use std::path::Path;

#[test]
fn report_matches_golden_file() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    let cfg = RunConfig::from_file(&dir.join("analyze.toml")).unwrap();
    let text = to_report_json(&run_pipeline(&cfg).unwrap()).unwrap();
    let expected_path = dir.join("expected_report.json");
    if std::env::var_os("COGALIGN_UPDATE_GOLDEN").is_some() {
        std::fs::write(&expected_path, &text).unwrap();
    }
    let expected = std::fs::read_to_string(&expected_path).unwrap();
    if text != expected {
        let a: serde_json::Value = serde_json::from_str(&text).unwrap();
        let b: serde_json::Value = serde_json::from_str(&expected).unwrap();
        common::json_close(&a, &b, 1e-9).unwrap();
    }
}
