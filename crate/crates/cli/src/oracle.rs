//! Reference computations that share no code path with the library: the
//! defining double integrals by tensor Gauss-Legendre quadrature, and direct
//! Monte Carlo sampling of correlated normal pairs.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Bivariate standard normal density with correlation `rho`.
fn density(x: f64, y: f64, rho: f64) -> f64 {
    let q = 1.0 - rho * rho;
    (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * q)).exp() / (2.0 * PI * q.sqrt())
}

/// `int_t^inf int_t^inf w(x, y) phi_2(x, y; rho) dx dy` by a tensor product
/// of composite Gauss-Legendre rules on `[t, max(t, 0) + 12]`.
pub fn tensor_orthant_integral<W: Fn(f64, f64) -> f64>(t: f64, rho: f64, weight: W) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(20).expect("nonzero"));
    let upper = t.max(0.0) + 12.0;
    let panels = 48;
    let width = (upper - t) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 20);
    for k in 0..panels {
        let a = t + width * k as f64;
        for &(x, w) in rule.as_node_weight_pairs() {
            nodes.push((a + 0.5 * width * (x + 1.0), 0.5 * width * w));
        }
    }
    nodes
        .iter()
        .map(|&(x, wx)| nodes.iter().map(|&(y, wy)| wy * weight(x, y) * density(x, y, rho)).sum::<f64>() * wx)
        .sum()
}

/// `E[Z(o); Z(o) >= t, Z(h) >= t]`.
pub fn e_t(t: f64, rho: f64) -> f64 {
    tensor_orthant_integral(t, rho, |x, _| x)
}

/// `E[Z(o) Z(h); Z(o) >= t, Z(h) >= t]`.
pub fn c_t(t: f64, rho: f64) -> f64 {
    tensor_orthant_integral(t, rho, |x, y| x * y)
}

/// `E[Z(o)^2; Z(o) >= 0, Z(h) >= 0]`.
pub fn v0(rho: f64) -> f64 {
    tensor_orthant_integral(0.0, rho, |x, _| x * x)
}

/// Monte Carlo estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McValue {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCharacteristics {
    pub rho: f64,
    pub pairs: usize,
    pub e: McValue,
    pub cov: McValue,
    pub gamma: McValue,
    pub kmm: McValue,
    pub cor: McValue,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    x: f64,
    y: f64,
    xx: f64,
    yy: f64,
    xy: f64,
    /// Marginal draws with `x >= 0`, for the mean mark.
    m_n: f64,
    m_x: f64,
}

impl Moments {
    fn characteristics(&self) -> [f64; 5] {
        let n = self.n;
        let (ex, ey) = (self.x / n, self.y / n);
        let (vx, vy) = (self.xx / n - ex * ex, self.yy / n - ey * ey);
        let c = self.xy / n;
        let cov = c - ex * ey;
        let mbar = self.m_x / self.m_n;
        [ex, cov, 0.5 * (self.xx + self.yy) / n - c, c / (mbar * mbar), cov / (vx * vy).sqrt()]
    }
}

/// Samples `(X, Y)` with correlation `rho`, keeps pairs with `X, Y >= 0`
/// until `pairs` are accepted, and estimates the five characteristics.
/// Each batch is an independent ChaCha8 stream, so the result does not
/// depend on scheduling.
pub fn threshold_zero_mc(rho: f64, pairs: usize, batches: usize, seed: u64) -> McCharacteristics {
    let per_batch = pairs.div_ceil(batches);
    let root = (1.0 - rho * rho).sqrt();
    let moments: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut m = Moments::default();
            while (m.n as usize) < per_batch {
                let x: f64 = rng.sample(StandardNormal);
                let e: f64 = rng.sample(StandardNormal);
                let y = rho * x + root * e;
                if x >= 0.0 {
                    m.m_n += 1.0;
                    m.m_x += x;
                }
                if x >= 0.0 && y >= 0.0 {
                    m.n += 1.0;
                    m.x += x;
                    m.y += y;
                    m.xx += x * x;
                    m.yy += y * y;
                    m.xy += x * y;
                }
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &moments {
        total.n += m.n;
        total.x += m.x;
        total.y += m.y;
        total.xx += m.xx;
        total.yy += m.yy;
        total.xy += m.xy;
        total.m_n += m.m_n;
        total.m_x += m.m_x;
    }
    let overall = total.characteristics();
    let per: Vec<[f64; 5]> = moments.iter().map(Moments::characteristics).collect();
    let b = batches as f64;
    let value = |i: usize| {
        let mean_b = per.iter().map(|v| v[i]).sum::<f64>() / b;
        let var = per.iter().map(|v| (v[i] - mean_b).powi(2)).sum::<f64>() / (b - 1.0);
        McValue { mean: overall[i], stderr: (var / b).sqrt() }
    };
    McCharacteristics {
        rho,
        pairs: total.n as usize,
        e: value(0),
        cov: value(1),
        gamma: value(2),
        kmm: value(3),
        cor: value(4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_case_factorizes() {
        // With rho = 0 the orthant integrals factor into one-dimensional ones.
        let half_normal_mean = 1.0 / (2.0 * PI).sqrt();
        assert!((e_t(0.0, 0.0) - half_normal_mean * 0.5).abs() < 1e-12);
        assert!((c_t(0.0, 0.0) - half_normal_mean * half_normal_mean).abs() < 1e-12);
        assert!((v0(0.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_mean_is_close() {
        let mc = threshold_zero_mc(0.0, 200_000, 20, 1);
        assert!((mc.e.mean - (2.0 / PI).sqrt()).abs() < 4.0 * mc.e.stderr + 1e-3);
        assert!(mc.cov.mean.abs() < 5.0 * mc.cov.stderr);
    }
}
