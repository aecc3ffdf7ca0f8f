use super::{sym_eigen, StatsError};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Generator identity echoed into every report.
pub const PRNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.9, seed_from_u64) with ziggurat standard normals (rand_distr 0.5); child streams seeded by splitmix64(seed ^ splitmix64(index))";

const PSD_CLIP_TOL: f64 = 1e-10;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded, reproducible random stream. Single owner; derive children with
/// [`RngStream::fork`] instead of sharing.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Position in the underlying ChaCha word stream.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Independent child stream keyed by `index`; does not advance `self`.
    pub fn fork(&self, index: u64) -> RngStream {
        RngStream::new(splitmix64(self.seed ^ splitmix64(index)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Factor `F` with `F * F^T = cov`, built from the eigendecomposition so that
/// singular (PSD but not PD) matrices are accepted. Eigenvalues in
/// `[-1e-10, 0)` are clipped to zero.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>, StatsError> {
    let eig = sym_eigen(cov)?;
    let n = cov.nrows();
    let mut f = eig.vectors.clone();
    for (j, &lambda) in eig.values.iter().enumerate() {
        if lambda < -PSD_CLIP_TOL {
            return Err(StatsError::NotPsd { min_eigenvalue: lambda });
        }
        let s = lambda.max(0.0).sqrt();
        for i in 0..n {
            f[(i, j)] *= s;
        }
    }
    Ok(f)
}

/// `n` i.i.d. draws from N(mean, cov), one per row.
pub fn mvn_sample(
    rng: &mut RngStream,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    n: usize,
) -> Result<DMatrix<f64>, StatsError> {
    let p = mean.len();
    if cov.nrows() != p {
        return Err(StatsError::DimensionMismatch {
            expected: p,
            got: cov.nrows(),
        });
    }
    let factor = psd_factor(cov)?;
    let mut out = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for row in 0..n {
        for k in 0..p {
            z[k] = rng.standard_normal();
        }
        let x = &factor * &z;
        for k in 0..p {
            out[(row, k)] = mean[k] + x[k];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RngStream::new(7);
        let mut b = RngStream::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.position(), b.position());
    }

    #[test]
    fn forks_differ_and_are_stable() {
        let root = RngStream::new(1);
        let mut c0 = root.fork(0);
        let mut c1 = root.fork(1);
        assert_ne!(c0.next_u64(), c1.next_u64());
        assert_eq!(root.fork(3).seed(), RngStream::new(1).fork(3).seed());
    }

    #[test]
    fn zero_covariance_returns_mean() {
        let mut rng = RngStream::new(3);
        let mean = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = mvn_sample(&mut rng, &mean, &DMatrix::zeros(3, 3), 5).unwrap();
        for r in 0..5 {
            for c in 0..3 {
                assert_eq!(x[(r, c)], mean[c]);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let mut rng = RngStream::new(3);
        assert!(matches!(
            mvn_sample(&mut rng, &DVector::zeros(2), &cov, 1),
            Err(StatsError::NotPsd { .. })
        ));
    }

    #[test]
    fn clips_tiny_negative_eigenvalues() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 - 1e-12]);
        assert!(psd_factor(&cov).is_ok());
    }

    #[test]
    fn identity_covariance_law_of_large_numbers() {
        let mut rng = RngStream::new(11);
        let x = mvn_sample(&mut rng, &DVector::zeros(3), &DMatrix::identity(3, 3), 10_000).unwrap();
        let n = x.nrows() as f64;
        for i in 0..3 {
            for j in 0..3 {
                let mi = x.column(i).mean();
                let mj = x.column(j).mean();
                let c = x
                    .column(i)
                    .iter()
                    .zip(x.column(j).iter())
                    .map(|(a, b)| (a - mi) * (b - mj))
                    .sum::<f64>()
                    / (n - 1.0);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c - target).abs() < 0.1, "cov[{i},{j}] = {c}");
            }
        }
    }
}
