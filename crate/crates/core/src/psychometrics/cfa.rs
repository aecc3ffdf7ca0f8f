use super::{item_correlations, PsychometricsError};
use crate::ingest::ResponseMatrix;
use crate::scale::ScaleDefinition;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const UNIQUENESS_FLOOR: f64 = 0.005;
const MAX_ITER: usize = 2000;
const TOL_F: f64 = 1e-9;
const TOL_GRAD: f64 = 1e-6;

/// Simple-structure assignment of items to factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorMapping {
    pub item_ids: Vec<String>,
    pub factors: Vec<String>,
    /// Factor index per item.
    pub assignment: Vec<usize>,
}

impl FactorMapping {
    pub fn new(
        item_ids: Vec<String>,
        factors: Vec<String>,
        assignment: Vec<usize>,
    ) -> Result<Self, PsychometricsError> {
        if item_ids.len() != assignment.len() {
            return Err(PsychometricsError::InvalidMapping(format!(
                "{} items but {} assignments",
                item_ids.len(),
                assignment.len()
            )));
        }
        if let Some(bad) = assignment.iter().find(|a| **a >= factors.len()) {
            return Err(PsychometricsError::InvalidMapping(format!(
                "factor index {bad} out of range"
            )));
        }
        for (f, name) in factors.iter().enumerate() {
            if !assignment.contains(&f) {
                return Err(PsychometricsError::InvalidMapping(format!(
                    "factor '{name}' has no items"
                )));
            }
        }
        Ok(Self {
            item_ids,
            factors,
            assignment,
        })
    }

    /// One factor per scale dimension present among `item_ids`.
    pub fn by_dimension(scale: &ScaleDefinition, item_ids: &[String]) -> Result<Self, PsychometricsError> {
        let dims: Vec<_> = item_ids
            .iter()
            .map(|id| {
                scale
                    .item(id)
                    .map(|it| it.dimension)
                    .ok_or_else(|| PsychometricsError::InvalidMapping(format!("unknown item '{id}'")))
            })
            .collect::<Result<_, _>>()?;
        let mut present = dims.clone();
        present.sort();
        present.dedup();
        let assignment = dims
            .iter()
            .map(|d| present.iter().position(|p| p == d).expect("present"))
            .collect();
        Self::new(
            item_ids.to_vec(),
            present.iter().map(|d| d.to_string()).collect(),
            assignment,
        )
    }

    pub fn single_factor(item_ids: &[String]) -> Self {
        Self {
            item_ids: item_ids.to_vec(),
            factors: vec!["general".into()],
            assignment: vec![0; item_ids.len()],
        }
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitIndices {
    pub chi2: f64,
    pub df: i64,
    pub chi2_over_df: f64,
    pub rmsea: f64,
    pub cfi: f64,
    pub tli: f64,
    pub n: usize,
    pub converged: bool,
    pub baseline_chi2: f64,
    pub baseline_df: i64,
    pub f_ml: f64,
    pub iterations: usize,
}

impl FitIndices {
    /// Indices for a discrepancy `f_ml` against the independence baseline.
    pub fn compute(f_ml: f64, df: i64, n: usize, baseline_chi2: f64, baseline_df: i64) -> Self {
        let nm1 = n as f64 - 1.0;
        let dff = df as f64;
        let chi2 = nm1 * f_ml;
        let excess = (chi2 - dff).max(0.0);
        let rmsea = (excess / (dff * nm1)).sqrt();
        let base_excess = baseline_chi2 - baseline_df as f64;
        let cfi = (1.0 - excess / base_excess.max(chi2 - dff).max(1e-12)).clamp(0.0, 1.0);
        let base_ratio = baseline_chi2 / baseline_df as f64;
        let tli = (base_ratio - chi2 / dff) / (base_ratio - 1.0);
        Self {
            chi2,
            df,
            chi2_over_df: chi2 / dff,
            rmsea,
            cfi,
            tli,
            n,
            converged: true,
            baseline_chi2,
            baseline_df,
            f_ml,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfaEstimates {
    pub item_ids: Vec<String>,
    pub factors: Vec<String>,
    pub loadings: Vec<f64>,
    pub uniquenesses: Vec<f64>,
    #[serde(with = "crate::matrix_rows")]
    pub factor_correlations: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfaResult {
    pub fit: FitIndices,
    pub estimates: CfaEstimates,
}

struct Model<'a> {
    s: &'a DMatrix<f64>,
    ln_det_s: f64,
    assignment: &'a [usize],
    p: usize,
    f: usize,
}

impl Model<'_> {
    fn n_params(&self) -> usize {
        2 * self.p + self.f * (self.f - 1) / 2
    }

    fn phi(&self, theta: &[f64]) -> DMatrix<f64> {
        let f = self.f;
        let mut l = DMatrix::zeros(f, f);
        let mut k = 2 * self.p;
        for i in 0..f {
            for j in 0..i {
                l[(i, j)] = theta[k];
                k += 1;
            }
            l[(i, i)] = 1.0;
            let norm = l.row(i).norm();
            l.row_mut(i).unscale_mut(norm);
        }
        let mut phi = &l * l.transpose();
        for i in 0..f {
            phi[(i, i)] = 1.0;
        }
        phi
    }

    fn uniqueness(eta: f64) -> f64 {
        UNIQUENESS_FLOOR + eta.exp()
    }

    fn sigma(&self, theta: &[f64]) -> DMatrix<f64> {
        let phi = self.phi(theta);
        let p = self.p;
        DMatrix::from_fn(p, p, |i, j| {
            let v = theta[i] * theta[j] * phi[(self.assignment[i], self.assignment[j])];
            if i == j {
                v + Self::uniqueness(theta[p + i])
            } else {
                v
            }
        })
    }

    fn discrepancy(&self, theta: &[f64]) -> f64 {
        let sigma = self.sigma(theta);
        let Some(chol) = sigma.cholesky() else {
            return f64::INFINITY;
        };
        let ln_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let trace = chol.solve(self.s).trace();
        ln_det + trace - self.ln_det_s - self.p as f64
    }

    fn gradient(&self, theta: &[f64], f0: f64) -> DVector<f64> {
        let mut x = theta.to_vec();
        DVector::from_fn(theta.len(), |i, _| {
            let h = 1e-5 * theta[i].abs().max(1.0);
            x[i] = theta[i] + h;
            let fp = self.discrepancy(&x);
            x[i] = theta[i] - h;
            let fm = self.discrepancy(&x);
            x[i] = theta[i];
            match (fp.is_finite(), fm.is_finite()) {
                (true, true) => (fp - fm) / (2.0 * h),
                (true, false) => (fp - f0) / h,
                (false, true) => (f0 - fm) / h,
                (false, false) => 0.0,
            }
        })
    }

    fn start(&self) -> Vec<f64> {
        let p = self.p;
        let f = self.f;
        let mut theta = vec![0.7; p];
        theta.extend(std::iter::repeat_n((0.51 - UNIQUENESS_FLOOR).ln(), p));
        if f > 1 {
            let phi0 = DMatrix::from_fn(f, f, |i, j| if i == j { 1.0 } else { 0.3 });
            let l = phi0.cholesky().expect("equicorrelation 0.3 is PD").l();
            for i in 1..f {
                for j in 0..i {
                    theta.push(l[(i, j)] / l[(i, i)]);
                }
            }
        }
        theta
    }
}

struct Optimum {
    theta: Vec<f64>,
    f: f64,
    converged: bool,
    iterations: usize,
}

fn bfgs(model: &Model) -> Optimum {
    let n = model.n_params();
    let mut x = DVector::from_vec(model.start());
    let mut fx = model.discrepancy(x.as_slice());
    let mut g = model.gradient(x.as_slice(), fx);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        if g.amax() < TOL_GRAD {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h.fill_with_identity();
            fresh = true;
            d = -g.clone();
            slope = g.dot(&d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + step * &d;
            let fxn = model.discrepancy(xn.as_slice());
            if fxn.is_finite() && fxn <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fxn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fxn)) = accepted else {
            if fresh {
                break;
            }
            h.fill_with_identity();
            fresh = true;
            continue;
        };
        let gn = model.gradient(xn.as_slice(), fxn);
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 {
            if fresh {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho(s hyᵀ + hy sᵀ) + (rho² yᵀHy + rho) s sᵀ
            h -= rho * (&s * hy.transpose() + &hy * s.transpose());
            h += (rho * rho * yhy + rho) * (&s * s.transpose());
            fresh = false;
        }
        let delta = fx - fxn;
        x = xn;
        fx = fxn;
        g = gn;
        if delta.abs() < TOL_F {
            converged = true;
            break;
        }
    }
    Optimum {
        theta: x.as_slice().to_vec(),
        f: fx,
        converged,
        iterations,
    }
}

/// Maximum-likelihood CFA on the item correlation matrix of `m`.
pub fn cfa(m: &ResponseMatrix, mapping: &FactorMapping) -> Result<CfaResult, PsychometricsError> {
    if mapping.item_ids != m.item_ids {
        return Err(PsychometricsError::InvalidMapping(
            "mapping items differ from matrix columns".into(),
        ));
    }
    let (r, n) = item_correlations(m)?;
    cfa_from_correlation(&r, n, mapping)
}

/// Maximum-likelihood CFA on a given correlation (or covariance) matrix
/// observed over `n` respondents.
pub fn cfa_from_correlation(
    s: &DMatrix<f64>,
    n: usize,
    mapping: &FactorMapping,
) -> Result<CfaResult, PsychometricsError> {
    let p = s.nrows();
    if s.ncols() != p || mapping.assignment.len() != p {
        return Err(PsychometricsError::InvalidMapping(format!(
            "{}x{} matrix for {} mapped items",
            s.nrows(),
            s.ncols(),
            mapping.assignment.len()
        )));
    }
    let chol = s.clone().cholesky().ok_or(PsychometricsError::NonPositiveDefiniteS)?;
    let ln_det_s = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let model = Model {
        s,
        ln_det_s,
        assignment: &mapping.assignment,
        p,
        f: mapping.n_factors(),
    };
    let q = model.n_params();
    let df = (p * (p + 1) / 2) as i64 - q as i64;
    if df < 1 {
        return Err(PsychometricsError::UnidentifiedModel { df });
    }
    if n <= q {
        return Err(PsychometricsError::TooFewRespondents { needed: q + 1, got: n });
    }

    let opt = bfgs(&model);
    if !opt.converged {
        log::warn!("CFA did not converge after {} iterations", opt.iterations);
    }
    let f_ml = if opt.f < TOL_F { 0.0 } else { opt.f };
    let ln_diag: f64 = s.diagonal().iter().map(|d| d.ln()).sum();
    let baseline_chi2 = (n as f64 - 1.0) * (ln_diag - ln_det_s);
    let baseline_df = (p * (p - 1) / 2) as i64;
    let mut fit = FitIndices::compute(f_ml, df, n, baseline_chi2, baseline_df);
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;

    let mut loadings = opt.theta[..p].to_vec();
    let uniquenesses = opt.theta[p..2 * p].iter().map(|e| Model::uniqueness(*e)).collect();
    let mut phi = model.phi(&opt.theta);
    for fac in 0..model.f {
        let total: f64 = (0..p)
            .filter(|i| mapping.assignment[*i] == fac)
            .map(|i| loadings[i])
            .sum();
        if total < 0.0 {
            for (i, l) in loadings.iter_mut().enumerate() {
                if mapping.assignment[i] == fac {
                    *l = -*l;
                }
            }
            for j in 0..model.f {
                if j != fac {
                    phi[(fac, j)] = -phi[(fac, j)];
                    phi[(j, fac)] = -phi[(j, fac)];
                }
            }
        }
    }
    Ok(CfaResult {
        fit,
        estimates: CfaEstimates {
            item_ids: mapping.item_ids.clone(),
            factors: mapping.factors.clone(),
            loadings,
            uniquenesses,
            factor_correlations: phi,
        },
    })
}
