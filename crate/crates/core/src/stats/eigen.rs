use super::StatsError;
use nalgebra::DMatrix;

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Full spectrum of a real symmetric matrix.
///
/// `values` are sorted descending and `vectors` holds the matching
/// orthonormal eigenvectors as columns. Each column is oriented so that its
/// largest-magnitude component is positive (first such component on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<EigenResult, StatsError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(StatsError::NotSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    let mut max_asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asym > SYMMETRY_TOL * scale {
        return Err(StatsError::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }

    // row-major working copy, symmetrized
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= 1e-15 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let big = (0..n).map(|k| v[k * n + src].abs()).fold(0.0, f64::max);
        let lead = (0..n).find(|&k| v[k * n + src].abs() >= big - 1e-12).unwrap_or(0);
        let sign = if v[lead * n + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, col)] = sign * v[k * n + src];
        }
    }
    Ok(EigenResult { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let e = sym_eigen(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = sym_eigen(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors[(0, 0)], 1.0);
        assert_eq!(e.vectors[(2, 1)], 1.0);
    }

    #[test]
    fn two_by_two() {
        // characteristic polynomial (2 - λ)^2 - 1 = 0 → λ ∈ {3, 1}
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - h).abs() < 1e-14);
        assert!((e.vectors[(1, 0)] - h).abs() < 1e-14);
        assert!((e.vectors[(0, 1)] - h).abs() < 1e-14);
        assert!((e.vectors[(1, 1)] + h).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            sym_eigen(&DMatrix::zeros(2, 3)),
            Err(StatsError::NotSquare { rows: 2, cols: 3 })
        ));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(sym_eigen(&m), Err(StatsError::NotSymmetric { .. })));
    }

    #[test]
    fn trace_and_reconstruction() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, -2.0, 0.5, 1.0, 3.0, 0.0, 1.5, -2.0, 0.0, 5.0, -1.0, 0.5, 1.5, -1.0, 2.0,
            ],
        );
        let e = sym_eigen(&m).unwrap();
        let tr: f64 = e.values.iter().sum();
        assert!((tr - m.trace()).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let r = &e.vectors * d * e.vectors.transpose();
        assert!((r - &m).norm() / m.norm() < 1e-12);
        let ortho = e.vectors.transpose() * &e.vectors;
        assert!((ortho - DMatrix::identity(4, 4)).amax() < 1e-12);
    }
}
