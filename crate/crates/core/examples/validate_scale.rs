//! Validate the bundled demo scale, score raw answers and parse free-text
//! completions.
//!
//! cargo run --example validate_scale

use cogalign::llm::parse_response;
use cogalign::scale::{demo_scale, score_response, validate_scale};

fn main() {
    let scale = demo_scale();
    let report = validate_scale(&scale);
    println!(
        "{} v{}: {} items, valid = {}",
        scale.name,
        scale.version,
        scale.items.len(),
        report.is_valid()
    );
    for w in &report.warnings {
        println!("  warning: {w:?}");
    }

    for (id, raw) in [("calc-01", "B"), ("calc-01", "E"), ("info-03", "4"), ("info-03", "9")] {
        let item = scale.item(id).unwrap();
        match score_response(item, raw) {
            Ok(v) => println!("{id} <- {raw:?}: value {} correct {:?}", v.value, v.correct),
            Err(e) => println!("{id} <- {raw:?}: {e}"),
        }
    }

    // free-text completions go through the lenient parser instead
    let item = scale.item("calc-01").unwrap();
    for raw in ["The answer is B.", "B) counter near the comparables", "no idea"] {
        println!("{raw:?} -> {:?}", parse_response(raw, item));
    }
}
