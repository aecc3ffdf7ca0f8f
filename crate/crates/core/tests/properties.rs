//! Property tests over the public API.

use cogalign::ingest::{
    load_responses, parse_scale, read_transcripts, scale_to_toml, transcripts_to_matrix, write_long, write_transcript,
    write_wide, Layout, ResponseMatrix, TranscriptRecord,
};
use cogalign::intervention::{compare_accuracy_matrices, compare_structures};
use cogalign::llm::{parse_response, ParsedOutcome, PromptCondition, RequestParams};
use cogalign::psychometrics::{alpha_covariance_form, cronbach_alpha_matrix, varimax};
use cogalign::rsa::{build_rsm, group_variability, rsm_compare, RsmMode};
use cogalign::scale::{accuracy, score_response, ItemFormat, SystemTag};
use cogalign::sna::{network_metrics, CognitiveNetwork};
use cogalign::stats::{pearson_r, spearman, student_t_sf, sym_eigen, welch_t, RngStream};
use cogalign::synthgen::{gen_population, synthetic_scale, PopulationSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn spread(v: &[f64]) -> bool {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    hi - lo > 1e-3
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0..100.0f64, n),
            prop::collection::vec(-100.0..100.0f64, n),
        )
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn synthetic(n: usize, seed: u64) -> (cogalign::scale::ScaleDefinition, ResponseMatrix) {
    let scale = synthetic_scale(3, 0.5, 1, 5);
    let mut spec = PopulationSpec::new("prop", n, seed).with_equicorrelation(0.3);
    spec.items_per_dimension = 3;
    let m = gen_population(&spec, &scale).unwrap();
    (scale, m)
}

fn permuted(m: &ResponseMatrix, rows: &[usize], cols: &[usize]) -> ResponseMatrix {
    let cells = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| m.get(r, c)).collect())
        .collect();
    ResponseMatrix::from_rows(
        m.group_label.clone(),
        rows.iter().map(|&r| m.respondent_ids[r].clone()).collect(),
        cols.iter().map(|&c| m.item_ids[c].clone()).collect(),
        cells,
        m.scale_ref.clone(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pearson_symmetric_and_affine((x, y) in pair(), a in 0.1..10.0f64, b in -100.0..100.0f64) {
        prop_assume!(spread(&x) && spread(&y));
        let r = pearson_r(&x, &y).unwrap();
        prop_assert!(r.abs() <= 1.0);
        prop_assert_eq!(r, pearson_r(&y, &x).unwrap());
        let up: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let down: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson_r(&up, &y).unwrap() - r).abs() < 1e-12);
        prop_assert!((pearson_r(&down, &y).unwrap() + r).abs() < 1e-12);
    }

    #[test]
    fn spearman_ignores_monotone_transforms((x, y) in pair()) {
        prop_assume!(spread(&x) && spread(&y));
        let s = spearman(&x, &y).unwrap();
        let cubed: Vec<f64> = x.iter().map(|v| v * v * v + 3.0).collect();
        let squashed: Vec<f64> = y.iter().map(|v| (v / 50.0).tanh()).collect();
        let t = spearman(&cubed, &squashed).unwrap();
        prop_assert!((s.r - t.r).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&s.p));
    }

    #[test]
    fn welch_is_antisymmetric((a, b) in pair(), shift in -50.0..50.0f64) {
        prop_assume!(spread(&a) && spread(&b));
        let b: Vec<f64> = b.iter().map(|v| v + shift).collect();
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!(ab.df > 0.0 && (0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn t_tails_sum_to_one(t in -50.0..50.0f64, df in 0.5..200.0f64) {
        let s = student_t_sf(t, df).unwrap() + student_t_sf(-t, df).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_trace_and_reconstruction(n in 1usize..16, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.standard_normal());
        let m = (&a + a.transpose()) * 0.5;
        let e = sym_eigen(&m).unwrap();
        prop_assert!((e.values.iter().sum::<f64>() - m.trace()).abs() < 1e-8);
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let rebuilt = &e.vectors * lambda * e.vectors.transpose();
        prop_assert!((&m - rebuilt).norm() <= 1e-8 * m.norm().max(f64::MIN_POSITIVE));
        prop_assert!((e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n)).amax() < 1e-8);
    }

    #[test]
    fn rng_is_reproducible(seed in any::<u64>(), fork in any::<u64>()) {
        let draw = |mut r: RngStream| (0..16).map(|_| r.next_u64()).collect::<Vec<_>>();
        prop_assert_eq!(draw(RngStream::new(seed)), draw(RngStream::new(seed)));
        prop_assert_eq!(draw(RngStream::new(seed).fork(fork)), draw(RngStream::new(seed).fork(fork)));
    }

    #[test]
    fn alpha_forms_agree(n in 3usize..30, k in 2usize..10, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let x = DMatrix::from_fn(n, k, |i, _| f[i] + rng.standard_normal());
        let a = cronbach_alpha_matrix(&x).unwrap();
        let b = alpha_covariance_form(&x).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        prop_assert!(a <= 1.0);
    }

    #[test]
    fn varimax_keeps_communalities(p in 3usize..12, m in 1usize..4, seed in any::<u64>()) {
        prop_assume!(m < p);
        let mut rng = RngStream::new(seed);
        let l = DMatrix::from_fn(p, m, |_, _| rng.standard_normal() * 0.5);
        let r = varimax(&l);
        for i in 0..p {
            let before: f64 = l.row(i).iter().map(|v| v * v).sum();
            let after: f64 = r.row(i).iter().map(|v| v * v).sum();
            prop_assert!((before - after).abs() < 1e-8);
        }
    }

    #[test]
    fn scoring_is_consistent(raw in "[A-Da-d1-7 ]{0,3}") {
        let scale = synthetic_scale(1, 0.6, 1, 5);
        for item in &scale.items {
            let once = score_response(item, &raw);
            prop_assert_eq!(&once, &score_response(item, &raw));
            if let Ok(s) = once {
                match item.format {
                    ItemFormat::MultipleChoice { .. } => {
                        prop_assert!(s.value == 0.0 || s.value == 1.0);
                        prop_assert_eq!(s.correct, Some(s.value == 1.0));
                    }
                    ItemFormat::Likert { min, max } => {
                        prop_assert!(s.value >= min as f64 && s.value <= max as f64);
                        prop_assert_eq!(s.correct, None);
                    }
                }
            }
        }
    }

    #[test]
    fn parse_response_is_total(raw in "\\PC{0,80}") {
        let scale = synthetic_scale(1, 0.6, 1, 5);
        for item in &scale.items {
            let a = parse_response(&raw, item);
            prop_assert_eq!(&a, &parse_response(&raw, item));
            let failed = matches!(a, ParsedOutcome::Failed { .. });
            prop_assert!(!failed);
        }
    }

    #[test]
    fn accuracy_permutation_and_mixture(seed in 0u64..1000, rows in permutation(12), cols in permutation(15)) {
        let (scale, m) = synthetic(12, seed);
        let base = accuracy(&m, &scale).unwrap();
        prop_assert_eq!(base, accuracy(&permuted(&m, &rows, &cols), &scale).unwrap());

        let (_, other) = synthetic(7, seed + 1);
        let mut other = other;
        other.respondent_ids = (0..7).map(|i| format!("extra-{i}")).collect();
        let b = accuracy(&other, &scale).unwrap();
        let joint = accuracy(&m.concat_rows(&other).unwrap(), &scale).unwrap();
        prop_assert!(joint >= base.min(b) - 0.005 && joint <= base.max(b) + 0.005);
    }

    #[test]
    fn rsm_is_permutation_equivariant(seed in 0u64..1000, cols in permutation(15)) {
        let (scale, m) = synthetic(25, seed);
        let rows: Vec<usize> = (0..25).collect();
        let a = build_rsm(&m, RsmMode::ItemSpace).unwrap();
        let b = build_rsm(&permuted(&m, &rows, &cols), RsmMode::ItemSpace).unwrap();
        for (i, &ci) in cols.iter().enumerate() {
            prop_assert_eq!(&b.labels[i], &a.labels[ci]);
            for (j, &cj) in cols.iter().enumerate() {
                prop_assert_eq!(b.get(i, j), a.get(ci, cj));
            }
        }
        let (_, m2) = synthetic(25, seed + 7);
        let c = build_rsm(&m2, RsmMode::ItemSpace).unwrap();
        prop_assert_eq!(rsm_compare(&a, &c).unwrap(), rsm_compare(&c, &a).unwrap());

        let sd = group_variability(&m, &scale).unwrap().sd;
        let rev: Vec<usize> = (0..25).rev().collect();
        let sd2 = group_variability(&permuted(&m, &rev, &cols), &scale).unwrap().sd;
        prop_assert!((sd - sd2).abs() < 1e-12);
        prop_assert!(sd >= 0.0);
    }

    #[test]
    fn network_metric_invariants(
        w in prop::collection::vec(prop::option::of(-1.0..1.0f64), 10),
        flips in prop::collection::vec(any::<bool>(), 10),
        perm in permutation(5),
        t1 in 0.0..0.5f64,
        t2 in 0.0..0.5f64,
    ) {
        prop_assume!(w.iter().any(|x| x.is_some()));
        let nodes: Vec<u8> = (0..5).collect();
        let pairs: Vec<(u8, u8)> = (0..5u8).flat_map(|a| ((a + 1)..5).map(move |b| (a, b))).collect();
        let tags = |f: &dyn Fn(u8) -> u8| -> BTreeMap<u8, SystemTag> {
            nodes.iter().map(|&n| (f(n), if n < 2 { SystemTag::Hot } else { SystemTag::Cold })).collect()
        };
        let weights: Vec<(u8, u8, f64)> = pairs.iter().zip(&w).filter_map(|(&(a, b), v)| v.map(|v| (a, b, v))).collect();
        let net = CognitiveNetwork::from_weights("p", nodes.clone(), &weights, tags(&|n| n));
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let m = network_metrics(&net, lo, lo).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.avg_connectivity) && (0.0..=1.0).contains(&m.density));
        let top = m.centrality.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(m.centrality.iter().find(|c| c.0 == m.dominant_core).unwrap().1, top);
        for n in &m.isolated {
            for e in net.edges.iter().filter(|e| e.a == *n || e.b == *n) {
                prop_assert!(e.weight.is_none_or(|v| v.abs() < lo));
            }
        }

        let m_hi = network_metrics(&net, hi, hi).unwrap();
        prop_assert!(m_hi.density <= m.density);
        prop_assert!(m.isolated.iter().all(|n| m_hi.isolated.contains(n)));

        let flipped: Vec<(u8, u8, f64)> = weights.iter().zip(&flips).map(|(&(a, b, v), f)| (a, b, if *f { -v } else { v })).collect();
        let mf = network_metrics(&CognitiveNetwork::from_weights("p", nodes.clone(), &flipped, tags(&|n| n)), lo, lo).unwrap();
        prop_assert_eq!(mf.avg_connectivity, m.avg_connectivity);
        prop_assert_eq!(mf.hot_cold_integration, m.hot_cold_integration);

        let relabel = |n: u8| perm[n as usize] as u8;
        let renamed: Vec<(u8, u8, f64)> = weights.iter().map(|&(a, b, v)| (relabel(a), relabel(b), v)).collect();
        let new_nodes: Vec<u8> = nodes.iter().map(|&n| relabel(n)).collect();
        let mr = network_metrics(&CognitiveNetwork::from_weights("p", new_nodes, &renamed, tags(&relabel)), lo, lo).unwrap();
        prop_assert_eq!(mr.dominant_core, relabel(m.dominant_core));
        prop_assert!((mr.avg_connectivity - m.avg_connectivity).abs() < 1e-15);
        prop_assert_eq!(mr.density, m.density);
        let mut iso: Vec<u8> = m.isolated.iter().map(|&n| relabel(n)).collect();
        iso.sort();
        let mut iso_r = mr.isolated.clone();
        iso_r.sort();
        prop_assert_eq!(iso, iso_r);
    }

    #[test]
    fn comparisons_are_antisymmetric(seed in 0u64..500) {
        let (scale, a) = synthetic(20, seed);
        let mut spec = PopulationSpec::new("post", 20, seed + 1000).with_equicorrelation(0.3);
        spec.items_per_dimension = 3;
        spec.rationality = [0.8; 5];
        let b = gen_population(&spec, &scale).unwrap();
        let fwd = compare_accuracy_matrices(&a, &b, &scale).unwrap();
        let back = compare_accuracy_matrices(&b, &a, &scale).unwrap();
        prop_assert_eq!(fwd.delta, -back.delta);
        let s1 = compare_structures(&a, &b, &scale, 0.05, 0.1).unwrap();
        let s2 = compare_structures(&b, &a, &scale, 0.05, 0.1).unwrap();
        prop_assert_eq!(s1.rsm_similarity, s2.rsm_similarity);
        let post_net = cogalign::sna::build_network(&b, &scale).unwrap();
        for (d, resolved) in &s1.isolation_resolved {
            if *resolved {
                let strongest = post_net
                    .edges
                    .iter()
                    .filter(|e| e.a == *d || e.b == *d)
                    .filter_map(|e| e.weight)
                    .fold(0.0f64, |m, w| m.max(w.abs()));
                prop_assert!(strongest >= 0.05);
            }
        }
    }

    #[test]
    fn scale_and_response_round_trips(ipd in 1usize..5, keyed in 0.0..=1.0f64, n in 1usize..15, seed in any::<u64>()) {
        let scale = synthetic_scale(ipd, keyed, 1, 7);
        let again = parse_scale(&scale_to_toml(&scale)).unwrap();
        prop_assert_eq!(&again, &scale);

        let mut spec = PopulationSpec::new("rt", n, seed);
        spec.items_per_dimension = ipd;
        spec.keyed_fraction = keyed;
        let m = gen_population(&spec, &scale).unwrap();
        let wide = load_responses(write_wide(&m, &scale).unwrap().as_bytes(), &scale, Layout::Wide, "rt").unwrap();
        let long = load_responses(write_long(&m, &scale).unwrap().as_bytes(), &scale, Layout::Long, "rt").unwrap();
        prop_assert_eq!(&wide.matrix, &m);
        prop_assert_eq!(&long.matrix, &m);
    }

    #[test]
    fn transcripts_convert_losslessly(seed in 0u64..1000, runs in 1u32..5, drop in 0.0..0.4f64) {
        let scale = synthetic_scale(2, 0.5, 1, 5);
        let mut rng = RngStream::new(seed);
        let mut records = Vec::new();
        for run in 0..runs {
            for item in &scale.items {
                let raw = match &item.format {
                    ItemFormat::MultipleChoice { .. } => ["A", "B", "C", "D"][(rng.uniform() * 4.0) as usize % 4].to_string(),
                    ItemFormat::Likert { min, max } => (min + (rng.uniform() * (max - min + 1) as f64) as i64).min(*max).to_string(),
                };
                let raw = if rng.uniform() < drop { "no idea".to_string() } else { format!("Answer: {raw}") };
                records.push(TranscriptRecord {
                    model: "m".into(),
                    condition: PromptCondition::Baseline,
                    run_index: run,
                    item_id: item.id.clone(),
                    system_text: String::new(),
                    prompt_text: String::new(),
                    parsed: parse_response(&raw, item),
                    raw_completion: Some(raw),
                    timestamp: String::new(),
                    request_params: RequestParams::default(),
                    retry_count: 0,
                });
            }
        }
        let mut buf = Vec::new();
        for r in &records {
            write_transcript(&mut buf, r).unwrap();
        }
        let back = read_transcripts(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &records);
        let m = transcripts_to_matrix(&back, &scale, "m").unwrap();
        for r in &records {
            let row = m.respondent_ids.iter().position(|id| *id == cogalign::ingest::run_label(r.run_index)).unwrap();
            let col = m.item_index(&r.item_id).unwrap();
            match &r.parsed {
                ParsedOutcome::Scored(s) => prop_assert_eq!(m.get(row, col), Some(s.value)),
                _ => prop_assert_eq!(m.get(row, col), None),
            }
        }
    }
}
