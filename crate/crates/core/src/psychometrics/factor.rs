use super::{column_correlations, item_correlations, PsychometricsError};
use crate::ingest::ResponseMatrix;
use crate::stats::{percentile_sorted, sym_eigen, RngStream};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelAnalysis {
    pub retained: usize,
    pub observed_eigs: Vec<f64>,
    pub threshold_eigs: Vec<f64>,
    pub n_sims: usize,
    pub percentile: f64,
    pub seed: u64,
    /// Complete rows used.
    pub n: usize,
}

/// Horn's parallel analysis on the item correlation matrix.
///
/// Simulation `i` draws from `RngStream::new(seed).fork(i)`, so the result
/// does not depend on thread scheduling.
pub fn parallel_analysis(
    m: &ResponseMatrix,
    n_sims: usize,
    percentile: f64,
    seed: u64,
) -> Result<ParallelAnalysis, PsychometricsError> {
    if m.k() < 2 {
        return Err(PsychometricsError::TooFewItems { needed: 2, got: m.k() });
    }
    if n_sims < 100 {
        return Err(PsychometricsError::TooFewSimulations(n_sims));
    }
    let (r, n) = item_correlations(m)?;
    let k = r.nrows();
    if n <= k {
        log::warn!("parallel analysis with n={n} not exceeding k={k}; thresholds will be unstable");
    }
    let observed_eigs = sym_eigen(&r)?.values;

    let root = RngStream::new(seed);
    let sims: Vec<Vec<f64>> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.fork(i as u64);
            loop {
                let x = DMatrix::from_fn(n, k, |_, _| rng.standard_normal());
                if let Ok(c) = column_correlations(&x) {
                    return sym_eigen(&c).expect("symmetric by construction").values;
                }
            }
        })
        .collect();

    let threshold_eigs: Vec<f64> = (0..k)
        .map(|rank| {
            let mut col: Vec<f64> = sims.iter().map(|s| s[rank]).collect();
            col.sort_by(f64::total_cmp);
            percentile_sorted(&col, percentile)
        })
        .collect();
    let retained = observed_eigs
        .iter()
        .zip(&threshold_eigs)
        .take_while(|(o, t)| o > t)
        .count();
    Ok(ParallelAnalysis {
        retained,
        observed_eigs,
        threshold_eigs,
        n_sims,
        percentile,
        seed,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    None,
    Varimax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSolution {
    pub item_ids: Vec<String>,
    /// items × factors
    #[serde(with = "crate::matrix_rows")]
    pub loadings: DMatrix<f64>,
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    pub rotation: Rotation,
    pub communalities: Vec<f64>,
}

fn varimax_criterion(l: &DMatrix<f64>) -> f64 {
    let p = l.nrows() as f64;
    l.column_iter()
        .map(|c| {
            let s2: f64 = c.iter().map(|v| v * v).sum();
            let s4: f64 = c.iter().map(|v| v.powi(4)).sum();
            (p * s4 - s2 * s2) / (p * p)
        })
        .sum()
}

/// Kaiser-normalized varimax by successive pairwise planar rotations, until
/// the criterion changes by less than 1e-8 or 200 sweeps.
pub fn varimax(loadings: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, f) = loadings.shape();
    if f < 2 {
        return loadings.clone();
    }
    let h: Vec<f64> = loadings
        .row_iter()
        .map(|r| {
            let n = r.norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut l = DMatrix::from_fn(p, f, |i, j| loadings[(i, j)] / h[i]);
    let pf = p as f64;
    let mut crit = varimax_criterion(&l);
    for _ in 0..200 {
        for a in 0..f {
            for b in (a + 1)..f {
                let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..p {
                    let (x, y) = (l[(i, a)], l[(i, b)]);
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    sa += u;
                    sb += v;
                    sc += u * u - v * v;
                    sd += 2.0 * u * v;
                }
                let num = sd - 2.0 * sa * sb / pf;
                let den = sc - (sa * sa - sb * sb) / pf;
                let phi = num.atan2(den) / 4.0;
                if phi.abs() < 1e-15 {
                    continue;
                }
                let (s, c) = phi.sin_cos();
                for i in 0..p {
                    let (x, y) = (l[(i, a)], l[(i, b)]);
                    l[(i, a)] = c * x + s * y;
                    l[(i, b)] = -s * x + c * y;
                }
            }
        }
        let next = varimax_criterion(&l);
        let done = (next - crit).abs() < 1e-8;
        crit = next;
        if done {
            break;
        }
    }
    for i in 0..p {
        for j in 0..f {
            l[(i, j)] *= h[i];
        }
    }
    l
}

/// Orders columns by explained variance and makes each column's
/// largest-magnitude loading positive.
fn canonicalize(l: &mut DMatrix<f64>) {
    let f = l.ncols();
    let mut order: Vec<usize> = (0..f).collect();
    let ss: Vec<f64> = (0..f).map(|j| l.column(j).norm_squared()).collect();
    order.sort_by(|a, b| ss[*b].total_cmp(&ss[*a]));
    let mut out = DMatrix::zeros(l.nrows(), f);
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &l.column(src));
        let col = out.column(dst);
        let amax = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = col.iter().find(|v| v.abs() >= amax - 1e-12).copied().unwrap_or(0.0);
        if lead < 0.0 {
            out.column_mut(dst).neg_mut();
        }
    }
    *l = out;
}

/// Principal-component extraction of `n_factors` factors followed by
/// varimax rotation when more than one factor is extracted.
pub fn efa(m: &ResponseMatrix, n_factors: usize) -> Result<FactorSolution, PsychometricsError> {
    let k = m.k();
    if n_factors == 0 || n_factors >= k {
        return Err(PsychometricsError::TooManyFactors {
            requested: n_factors,
            items: k,
        });
    }
    let (r, _) = item_correlations(m)?;
    let eig = sym_eigen(&r)?;
    let unrotated = DMatrix::from_fn(k, n_factors, |i, j| eig.vectors[(i, j)] * eig.values[j].max(0.0).sqrt());
    let (mut loadings, rotation) = if n_factors > 1 {
        (varimax(&unrotated), Rotation::Varimax)
    } else {
        (unrotated, Rotation::None)
    };
    canonicalize(&mut loadings);
    let communalities = loadings.row_iter().map(|r| r.norm_squared()).collect();
    Ok(FactorSolution {
        item_ids: m.item_ids.clone(),
        loadings,
        eigenvalues: eig.values,
        rotation,
        communalities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_structure_is_a_fixed_point() {
        let l = DMatrix::from_row_slice(6, 2, &[0.8, 0.0, 0.7, 0.0, 0.6, 0.0, 0.0, 0.9, 0.0, 0.5, 0.0, 0.4]);
        let r = varimax(&l);
        assert!((r - l).abs().max() < 1e-6);
    }

    #[test]
    fn varimax_preserves_communalities() {
        let l = DMatrix::from_row_slice(
            5,
            3,
            &[
                0.6, 0.3, 0.1, 0.5, -0.4, 0.2, 0.3, 0.3, 0.7, -0.2, 0.6, 0.1, 0.4, 0.4, 0.4,
            ],
        );
        let r = varimax(&l);
        for i in 0..5 {
            assert!((r.row(i).norm_squared() - l.row(i).norm_squared()).abs() < 1e-8);
        }
    }

    #[test]
    fn rotation_recovers_a_rotated_simple_structure() {
        let l = DMatrix::from_row_slice(4, 2, &[0.8, 0.0, 0.7, 0.0, 0.0, 0.6, 0.0, 0.5]);
        let (s, c) = 0.4f64.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let mut r = varimax(&(&l * rot));
        canonicalize(&mut r);
        assert!((r - l).abs().max() < 1e-6);
    }
}
