//! Generate a human-like population and an LLM-like run set, then write the
//! first rows of each as wide CSV.
//!
//! cargo run --example synthesize

use cogalign::ingest::write_wide;
use cogalign::rsa::group_variability;
use cogalign::scale::demo_scale;
use cogalign::synthgen::{gen_llm_like, gen_population, PopulationSpec};

fn main() {
    let scale = demo_scale();

    let humans = gen_population(&PopulationSpec::new("human", 200, 1).with_equicorrelation(0.3), &scale).unwrap();
    let mut llm_spec = PopulationSpec::new("llm", 30, 2);
    llm_spec.variability_scale = 0.2;
    let llm = gen_llm_like(&llm_spec, &scale).unwrap();

    for m in [&humans, &llm] {
        let v = group_variability(m, &scale).unwrap();
        println!(
            "{:>6}: n {:>3}, mean score {:.1}%, sd {:.2}",
            m.group_label,
            m.n(),
            v.mean,
            v.sd
        );
    }

    let csv = write_wide(&llm, &scale).unwrap();
    for line in csv.lines().take(4) {
        println!("{line}");
    }
}
