//! Build item-space similarity matrices for two human samples and a set of
//! LLM runs and compare them pairwise.
//!
//! cargo run --example representational_similarity

use cogalign::rsa::{build_rsm, rsm_compare, RsmMode};
use cogalign::scale::demo_scale;
use cogalign::synthgen::{gen_llm_like, gen_population, PopulationSpec};

fn main() {
    let scale = demo_scale();
    let young = gen_population(&PopulationSpec::new("young", 150, 11).with_equicorrelation(0.3), &scale).unwrap();
    let older = gen_population(&PopulationSpec::new("older", 120, 12).with_equicorrelation(0.2), &scale).unwrap();
    let mut spec = PopulationSpec::new("llm", 30, 13);
    spec.variability_scale = 0.3;
    let llm = gen_llm_like(&spec, &scale).unwrap();

    let rsms: Vec<_> = [&young, &older, &llm]
        .iter()
        .map(|m| build_rsm(m, RsmMode::ItemSpace).unwrap())
        .collect();
    for i in 0..rsms.len() {
        for j in (i + 1)..rsms.len() {
            let r = rsm_compare(&rsms[i], &rsms[j]).unwrap();
            println!("{} vs {}: {r:.3}", rsms[i].group_label, rsms[j].group_label);
        }
    }

    // respondent space is only comparable between matrices over the same respondents
    let by_resp = build_rsm(&llm, RsmMode::RespondentSpace).unwrap();
    println!(
        "respondent-space RSM for {}: {}x{}",
        llm.group_label,
        by_resp.size(),
        by_resp.size()
    );
    println!("{:?}", rsm_compare(&by_resp, &rsms[2]).unwrap_err());
}
