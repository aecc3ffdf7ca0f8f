use super::{mean, sample_variance, student_t_two_sided, StatsError};
use serde::{Deserialize, Serialize};

/// Unequal-variance two-sample t test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    pub p: f64,
}

/// Welch's t test of `mean(a) - mean(b)`, two-sided.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    for g in [a, b] {
        if g.len() < 2 {
            return Err(StatsError::InsufficientData {
                needed: 2,
                got: g.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let qa = sample_variance(a) / na;
    let qb = sample_variance(b) / nb;
    let se2 = qa + qb;
    if se2 == 0.0 {
        if ma == mb {
            return Err(StatsError::BothConstantEqual);
        }
        // both constant but shifted: separation is exact
        return Ok(TTestResult {
            t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
            df: na + nb - 2.0,
            p: 0.0,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let p = student_t_two_sided(t, df)?;
    Ok(TTestResult { t, df, p })
}
