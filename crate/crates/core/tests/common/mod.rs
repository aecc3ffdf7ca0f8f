//! Independent reference implementations used by the integration tests.
//! None of these call into the library's numeric kernel.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// Pearson r via the pairwise-difference identity
/// `cov = sum_{i<j} (x_i - x_j)(y_i - y_j) / (n (n - 1))`.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    sxy / (sxx * syy).sqrt()
}

/// Mid-ranks by counting.
pub fn ranks_oracle(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&u| u < v).count() as f64;
            let tied = x.iter().filter(|&&u| u == v).count() as f64;
            below + (tied + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson_oracle(&ranks_oracle(x), &ranks_oracle(y))
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Tanh-sinh quadrature of `f` over `[0, b]`, written so that abscissae
/// near 0 keep full relative precision.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, b: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    let kmax = (4.5 / h) as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let s = logistic(2.0 * u);
        let x = b * s;
        if x <= 0.0 || x >= b {
            continue;
        }
        let e = (-2.0 * u.abs()).exp();
        let ds = 2.0 * e / ((1.0 + e) * (1.0 + e));
        let w = b * ds * FRAC_PI_2 * t.cosh();
        sum += w * f(x);
    }
    sum * h
}

/// Two-sided Student-t tail probability by quadrature. With
/// `u = sqrt(df) cot(phi)` the density becomes proportional to
/// `sin(phi)^(df - 1)` on `(0, pi/2)`.
pub fn t_two_sided_oracle(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let k = df - 1.0;
    let g = |phi: f64| phi.sin().powf(k);
    let upper = (df.sqrt() / t.abs()).atan();
    tanh_sinh(g, upper) / tanh_sinh(g, FRAC_PI_2)
}

pub fn t_sf_oracle(t: f64, df: f64) -> f64 {
    let half = 0.5 * t_two_sided_oracle(t, df);
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// p-value of a correlation `r` over `n` pairs.
pub fn correlation_p_oracle(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    t_two_sided_oracle(r * (df / (1.0 - r * r)).sqrt(), df)
}

/// `(t, df, p)` of Welch's test with two-pass variances.
pub fn welch_oracle(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let stats = |g: &[f64]| {
        let n = g.len() as f64;
        let m = g.iter().sum::<f64>() / n;
        let v = g.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let qa = va / na;
    let qb = vb / nb;
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    (t, df, t_two_sided_oracle(t, df))
}

/// Tiny deterministic generator so oracle inputs do not depend on the
/// library's own RNG.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n
    }
}

/// Structural JSON equality with numbers compared to a relative tolerance.
/// Returns the path of the first difference.
pub fn json_close(a: &serde_json::Value, b: &serde_json::Value, rel: f64) -> Result<(), String> {
    fn walk(a: &serde_json::Value, b: &serde_json::Value, rel: f64, path: &str) -> Result<(), String> {
        use serde_json::Value::*;
        match (a, b) {
            (Number(x), Number(y)) => {
                let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
                let scale = x.abs().max(y.abs()).max(1.0);
                if (x - y).abs() <= rel * scale {
                    Ok(())
                } else {
                    Err(format!("{path}: {x} vs {y}"))
                }
            }
            (Array(x), Array(y)) => {
                if x.len() != y.len() {
                    return Err(format!("{path}: length {} vs {}", x.len(), y.len()));
                }
                for (i, (u, v)) in x.iter().zip(y).enumerate() {
                    walk(u, v, rel, &format!("{path}[{i}]"))?;
                }
                Ok(())
            }
            (Object(x), Object(y)) => {
                if x.len() != y.len() || x.keys().zip(y.keys()).any(|(p, q)| p != q) {
                    return Err(format!("{path}: key sets differ"));
                }
                for (k, u) in x {
                    walk(u, &y[k], rel, &format!("{path}.{k}"))?;
                }
                Ok(())
            }
            _ if a == b => Ok(()),
            _ => Err(format!("{path}: {a} vs {b}")),
        }
    }
    walk(a, b, rel, "$")
}
