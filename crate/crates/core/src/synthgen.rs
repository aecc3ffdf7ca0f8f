//! Seeded synthetic populations with known factor structure and
//! variability, used to verify the analysis pipeline end to end.

use crate::ingest::ResponseMatrix;
use crate::scale::{default_partition, ChoiceOption, Dimension, Item, ItemFormat, ScaleDefinition};
use crate::stats::{mvn_sample, sym_eigen, RngStream};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("scale does not match the population spec: {0}")]
    SpecScaleMismatch(String),
    #[error("invalid population spec: {0}")]
    InvalidSpec(String),
}

/// Per-dimension values are indexed in canonical dimension order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub group_label: String,
    pub n: usize,
    pub items_per_dimension: usize,
    pub loadings: [f64; 5],
    #[serde(with = "crate::matrix_rows")]
    pub factor_correlations: DMatrix<f64>,
    /// 1.0 for human-like dispersion, below 0.5 for LLM-like.
    pub variability_scale: f64,
    /// Extra per-dimension multiplier on `variability_scale`.
    pub dimension_variability: [f64; 5],
    pub keyed_fraction: f64,
    pub rationality: [f64; 5],
    pub seed: u64,
}

impl PopulationSpec {
    /// Five uncorrelated factors, loadings 0.6, half the items keyed, 50%
    /// rationality.
    pub fn new(group_label: impl Into<String>, n: usize, seed: u64) -> Self {
        Self {
            group_label: group_label.into(),
            n,
            items_per_dimension: 4,
            loadings: [0.6; 5],
            factor_correlations: DMatrix::identity(5, 5),
            variability_scale: 1.0,
            dimension_variability: [1.0; 5],
            keyed_fraction: 0.5,
            rationality: [0.5; 5],
            seed,
        }
    }

    /// Sets every off-diagonal factor correlation to `r`.
    pub fn with_equicorrelation(mut self, r: f64) -> Self {
        self.factor_correlations = DMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 } else { r });
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n == 0 || self.items_per_dimension == 0 {
            return bad("n and items_per_dimension must be positive".into());
        }
        if let Some(l) = self.loadings.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
            return bad(format!("loading {l} outside (0, 1]"));
        }
        if !(self.variability_scale >= 0.0) || self.dimension_variability.iter().any(|v| !(*v >= 0.0)) {
            return bad("variability must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.keyed_fraction) {
            return bad(format!("keyed_fraction {} outside [0, 1]", self.keyed_fraction));
        }
        if let Some(r) = self.rationality.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("rationality {r} outside [0, 1]"));
        }
        let phi = &self.factor_correlations;
        if phi.shape() != (5, 5) {
            return bad("factor_correlations must be 5x5".into());
        }
        for i in 0..5 {
            if phi[(i, i)] != 1.0 {
                return bad("factor_correlations needs a unit diagonal".into());
            }
            for j in 0..i {
                if phi[(i, j)] != phi[(j, i)] {
                    return bad("factor_correlations is not symmetric".into());
                }
            }
        }
        let min = sym_eigen(phi)
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))?
            .values[4];
        if min < -1e-10 {
            return bad(format!("factor_correlations is not PSD (eigenvalue {min:e})"));
        }
        Ok(())
    }

    fn dim_sd(&self, d: Dimension) -> f64 {
        self.variability_scale * self.dimension_variability[d.index()]
    }
}

/// Scale with `items_per_dimension` items per dimension, the first
/// `round(keyed_fraction * items_per_dimension)` of each being four-option
/// multiple choice keyed on "A", the rest Likert `likert_min..=likert_max`.
pub fn synthetic_scale(
    items_per_dimension: usize,
    keyed_fraction: f64,
    likert_min: i64,
    likert_max: i64,
) -> ScaleDefinition {
    let keyed = (keyed_fraction * items_per_dimension as f64).round() as usize;
    let mut items = Vec::new();
    let mut catalog = std::collections::BTreeSet::new();
    for d in Dimension::ALL {
        let stem = d.as_str().to_ascii_lowercase();
        for j in 0..items_per_dimension {
            let id = format!("{stem}-{:02}", j + 1);
            let bias_name = format!("{} bias {}", d.as_str(), j + 1);
            catalog.insert(bias_name.clone());
            let format = if j < keyed {
                ItemFormat::MultipleChoice {
                    options: ["A", "B", "C", "D"]
                        .iter()
                        .map(|o| ChoiceOption {
                            id: o.to_string(),
                            text: format!("Option {o} for {id}"),
                        })
                        .collect(),
                    rational_key: "A".into(),
                }
            } else {
                ItemFormat::Likert {
                    min: likert_min,
                    max: likert_max,
                }
            };
            items.push(Item {
                text: format!("Synthetic scenario {id}."),
                id,
                dimension: d,
                bias_name,
                format,
            });
        }
    }
    ScaleDefinition {
        name: "synthetic".into(),
        version: format!("{items_per_dimension}x{keyed}k-{likert_min}-{likert_max}"),
        items,
        bias_catalog: catalog,
        hot_cold_partition: default_partition(),
    }
}

fn check_scale(spec: &PopulationSpec, scale: &ScaleDefinition) -> Result<(), SynthError> {
    for d in Dimension::ALL {
        let count = scale.items_in(d).count();
        if count != spec.items_per_dimension {
            return Err(SynthError::SpecScaleMismatch(format!(
                "{d} has {count} items, spec expects {}",
                spec.items_per_dimension
            )));
        }
    }
    Ok(())
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Shift `s` with E[logistic(1.7 sd Z + s)] = target for standard normal Z.
fn correctness_shift(target: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return (target / (1.0 - target)).ln();
    }
    let expected = |s: f64| {
        // Simpson's rule over z in [-8, 8]
        let steps = 800;
        let h = 16.0 / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let z = -8.0 + i as f64 * h;
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * logistic(1.7 * sd * z + s) * (-0.5 * z * z).exp();
        }
        acc * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
    };
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn likert_bin(y: f64, min: i64, max: i64) -> f64 {
    let k = (max - min + 1) as f64;
    let c = ((y + 3.0) / (6.0 / k)).floor().clamp(0.0, k - 1.0);
    min as f64 + c
}

fn keyed_correct(p_shift: f64, rationality: f64, y: f64, u: f64) -> f64 {
    let correct = if rationality <= 0.0 {
        false
    } else if rationality >= 1.0 {
        true
    } else {
        u < logistic(1.7 * y + p_shift)
    };
    if correct {
        1.0
    } else {
        0.0
    }
}

fn labels(spec: &PopulationSpec, prefix: &str) -> Vec<String> {
    (0..spec.n).map(|i| format!("{prefix}-{:04}", i + 1)).collect()
}

fn draw_factors(spec: &PopulationSpec, rng: &mut RngStream, n: usize) -> Result<DMatrix<f64>, SynthError> {
    mvn_sample(rng, &DVector::zeros(5), &spec.factor_correlations, n)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

/// Respondents with item latents `v_d (λ f + sqrt(1-λ²) e)`; Likert items are
/// binned over ±3, keyed items are correct with probability
/// `logistic(1.7 y + shift_d)`.
pub fn gen_population(spec: &PopulationSpec, scale: &ScaleDefinition) -> Result<ResponseMatrix, SynthError> {
    spec.validate()?;
    check_scale(spec, scale)?;
    let mut rng = RngStream::new(spec.seed);
    let factors = draw_factors(spec, &mut rng, spec.n)?;
    let shifts: Vec<f64> = Dimension::ALL
        .iter()
        .map(|d| {
            let r = spec.rationality[d.index()];
            if r > 0.0 && r < 1.0 {
                correctness_shift(r, spec.dim_sd(*d))
            } else {
                0.0
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mut row = Vec::with_capacity(scale.items.len());
        for item in &scale.items {
            let d = item.dimension.index();
            let lambda = spec.loadings[d];
            let e = rng.standard_normal();
            let u = rng.uniform();
            let y =
                spec.dim_sd(item.dimension) * (lambda * factors[(i, d)] + (1.0 - lambda * lambda).max(0.0).sqrt() * e);
            row.push(Some(match item.format {
                ItemFormat::Likert { min, max } => likert_bin(y, min, max),
                ItemFormat::MultipleChoice { .. } => keyed_correct(shifts[d], spec.rationality[d], y, u),
            }));
        }
        rows.push(row);
    }
    ResponseMatrix::from_rows(
        spec.group_label.clone(),
        labels(spec, "resp"),
        scale.items.iter().map(|i| i.id.clone()).collect(),
        rows,
        scale.reference(),
    )
    .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

/// Repeated runs of a single agent: one shared prototype latent per item
/// (and a shared acceptance threshold for keyed items), with each run
/// perturbed by `v_d (λ f + sqrt(1-λ²) e)`. At zero variability every run is
/// identical.
pub fn gen_llm_like(spec: &PopulationSpec, scale: &ScaleDefinition) -> Result<ResponseMatrix, SynthError> {
    spec.validate()?;
    check_scale(spec, scale)?;
    let mut rng = RngStream::new(spec.seed);
    let proto_f = draw_factors(spec, &mut rng, 1)?;
    let proto: Vec<(f64, f64)> = scale
        .items
        .iter()
        .map(|item| {
            let d = item.dimension.index();
            let lambda = spec.loadings[d];
            let e = rng.standard_normal();
            let u = rng.uniform();
            (
                lambda * proto_f[(0, d)] + (1.0 - lambda * lambda).max(0.0).sqrt() * e,
                u,
            )
        })
        .collect();
    let factors = draw_factors(spec, &mut rng, spec.n)?;
    let shifts: Vec<f64> = Dimension::ALL
        .iter()
        .map(|d| {
            let r = spec.rationality[d.index()];
            let sd = (1.0 + spec.dim_sd(*d).powi(2)).sqrt();
            if r > 0.0 && r < 1.0 {
                correctness_shift(r, sd)
            } else {
                0.0
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mut row = Vec::with_capacity(scale.items.len());
        for (item, (base, u)) in scale.items.iter().zip(&proto) {
            let d = item.dimension.index();
            let lambda = spec.loadings[d];
            let e = rng.standard_normal();
            let y = base
                + spec.dim_sd(item.dimension)
                    * (lambda * factors[(i, d)] + (1.0 - lambda * lambda).max(0.0).sqrt() * e);
            row.push(Some(match item.format {
                ItemFormat::Likert { min, max } => likert_bin(y, min, max),
                ItemFormat::MultipleChoice { .. } => keyed_correct(shifts[d], spec.rationality[d], y, *u),
            }));
        }
        rows.push(row);
    }
    ResponseMatrix::from_rows(
        spec.group_label.clone(),
        labels(spec, "run"),
        scale.items.iter().map(|i| i.id.clone()).collect(),
        rows,
        scale.reference(),
    )
    .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}
