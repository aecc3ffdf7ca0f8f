use super::PsychometricsError;
use crate::stats::sym_eigen;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsResult {
    /// points × dims
    #[serde(with = "crate::matrix_rows")]
    pub coordinates: DMatrix<f64>,
    /// Eigenvalues of the double-centered matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Sum of magnitudes of the negative eigenvalues that were dropped.
    pub dropped_negative_mass: f64,
}

/// Distance `sqrt(2(1 - r))` between standardized variables with correlation
/// `r`.
pub fn correlation_distance(r: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| {
        if i == j {
            0.0
        } else {
            (2.0 * (1.0 - r[(i, j)])).max(0.0).sqrt()
        }
    })
}

/// Torgerson classical scaling into `dims` dimensions.
pub fn classical_mds(d: &DMatrix<f64>, dims: usize) -> Result<MdsResult, PsychometricsError> {
    let n = d.nrows();
    let invalid = |m: String| Err(PsychometricsError::InvalidDistanceMatrix(m));
    if d.ncols() != n || n == 0 {
        return invalid(format!("shape {}x{}", d.nrows(), d.ncols()));
    }
    if dims == 0 {
        return invalid("dims must be at least 1".into());
    }
    let scale = d.amax().max(1.0);
    for i in 0..n {
        if d[(i, i)] != 0.0 {
            return invalid(format!("nonzero diagonal at {i}"));
        }
        for j in 0..n {
            let v = d[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return invalid(format!("entry ({i},{j}) = {v}"));
            }
            if (v - d[(j, i)]).abs() > 1e-10 * scale {
                return invalid(format!("asymmetric at ({i},{j})"));
            }
        }
    }

    let d2 = d.map(|v| v * v);
    let row_means: Vec<f64> = d2.row_iter().map(|r| r.sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand));
    let b = (&b + b.transpose()) * 0.5;
    let eig = sym_eigen(&b)?;
    let dropped_negative_mass: f64 = eig.values.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    if dropped_negative_mass > 1e-10 * eig.values[0].abs().max(1.0) {
        log::warn!("classical MDS dropped negative eigenvalues totalling {dropped_negative_mass:.3e}");
    }
    let coordinates = DMatrix::from_fn(n, dims, |i, j| match eig.values.get(j) {
        Some(l) if *l > 0.0 => eig.vectors[(i, j)] * l.sqrt(),
        _ => 0.0,
    });
    Ok(MdsResult {
        coordinates,
        eigenvalues: eig.values,
        dropped_negative_mass,
    })
}
