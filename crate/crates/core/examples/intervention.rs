//! Pre/post comparison for one model. The "pre" runs are LLM-like with 50%
//! rationality and an isolated Information module; the "post" runs are more
//! rational and Information is wired back in.
//!
//! cargo run --example intervention

use cogalign::intervention::{compare_accuracy_matrices, compare_structures};
use cogalign::scale::demo_scale;
use cogalign::synthgen::{gen_llm_like, PopulationSpec};

fn main() {
    let scale = demo_scale();

    let mut pre = PopulationSpec::new("pre", 30, 21).with_equicorrelation(0.3);
    pre.variability_scale = 0.3;
    pre.dimension_variability[2] = 0.0;
    let mut post = PopulationSpec::new("post", 30, 22).with_equicorrelation(0.3);
    post.variability_scale = 0.3;
    post.rationality = [0.8; 5];
    let pre = gen_llm_like(&pre, &scale).unwrap();
    let post = gen_llm_like(&post, &scale).unwrap();

    let cmp = compare_accuracy_matrices(&pre, &post, &scale).unwrap();
    println!(
        "accuracy {:.2}% -> {:.2}% (delta {:+.2})",
        cmp.pre_accuracy, cmp.post_accuracy, cmp.delta
    );
    match (&cmp.ttest, &cmp.note) {
        (Some(t), _) => println!("Welch t {:.3}, df {:.1}, p {:.2e}", t.t, t.df, t.p),
        (_, note) => println!("no t-test: {note:?}"),
    }

    let change = compare_structures(&pre, &post, &scale, 0.05, 0.1).unwrap();
    println!("item-space RSM similarity {:.3}", change.rsm_similarity);
    println!(
        "connectivity {:+.3}, density {:+.2}",
        change.network_deltas.avg_connectivity, change.network_deltas.density
    );
    for (dim, resolved) in &change.isolation_resolved {
        if *resolved {
            println!("{dim:?} is no longer isolated");
        }
    }
}
