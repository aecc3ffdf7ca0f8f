//! Reliability, parallel analysis, rotated EFA and a five-factor CFA on a
//! synthetic human sample.
//!
//! cargo run --release --example psychometrics

use cogalign::psychometrics::{cfa, cronbach_alpha, efa, parallel_analysis, FactorMapping};
use cogalign::scale::demo_scale;
use cogalign::synthgen::{gen_population, PopulationSpec};

fn main() {
    let scale = demo_scale();
    let m = gen_population(&PopulationSpec::new("human", 330, 7).with_equicorrelation(0.3), &scale).unwrap();

    let rel = cronbach_alpha(&m).unwrap();
    println!("alpha {:.3} over {} items, {} complete rows", rel.alpha, rel.k, rel.n);

    let pa = parallel_analysis(&m, 1000, 95.0, 7).unwrap();
    println!("parallel analysis retains {} factor(s)", pa.retained);
    for (o, t) in pa.observed_eigs.iter().zip(&pa.threshold_eigs).take(6) {
        println!("  observed {o:6.3}  random {t:6.3}");
    }

    let sol = efa(&m, pa.retained.max(2)).unwrap();
    println!("varimax communalities: {:.2?}", sol.communalities);

    let mapping = FactorMapping::by_dimension(&scale, &m.item_ids).unwrap();
    let fit = cfa(&m, &mapping).unwrap().fit;
    println!(
        "CFA chi2 {:.2} df {} chi2/df {:.2} RMSEA {:.3} CFI {:.3} TLI {:.3} converged {}",
        fit.chi2, fit.df, fit.chi2_over_df, fit.rmsea, fit.cfi, fit.tli, fit.converged
    );
}
