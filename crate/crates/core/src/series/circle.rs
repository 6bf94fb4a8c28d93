//! Second derivative of `h = f - g` on the closed unit disc, where
//! `f(z) = sqrt(1 - z^2)/A(z) - (pi/2)(1 + z)^2/A(z)^2`, `A(z) = arcsin z + pi/2`
//! and `g` is the branch-point comparison function of [`super::taylor`].
//!
//! Three representations are stitched together:
//!
//! * near `z = 1`, a power series in `sigma = sqrt((1 - z)/2)`; the terms of
//!   `g` cancel the odd powers `sigma` and `sigma^3` of `f`, which is what makes
//!   `h''` continuous at the branch point;
//! * near `z = -1`, a power series in `u = (1 + z)/2` for `f`, with `g''`
//!   evaluated directly;
//! * elsewhere, the closed-form derivative with principal-branch complex
//!   `arcsin` and square roots (cuts on `(-inf, -1)` and `(1, inf)`).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::power::{horner_complex, PowerSeries};
use super::real::Real;
use super::taylor::{c1, c2, series_arcsin_shifted};
use crate::Result;

/// Radius around `z = +-1` inside which the local expansions are used.
pub const LOCAL_RADIUS: f64 = 0.5;

/// Default number of terms of the local expansions.
pub const DEFAULT_LOCAL_ORDER: usize = 96;

/// Evaluator for `h''` on the closed unit disc. Construction builds the two
/// local expansions once; evaluation is then cheap.
#[derive(Debug, Clone)]
pub struct HSecondDerivative {
    c1: f64,
    c2: f64,
    /// `h''(z) = sum_k near_one[k] sigma^k`
    near_one: Vec<f64>,
    /// `f''(z) = sum_k near_minus_one[k] u^k`
    near_minus_one: Vec<f64>,
}

impl HSecondDerivative {
    pub fn new(order: usize, precision: usize) -> Result<Self> {
        let p = precision;
        let (c1r, c2r) = (c1(p), c2(p));
        let near_one = sigma_expansion(order, p, &c1r, &c2r)?;
        let near_minus_one = u_expansion(order, p)?;
        Ok(Self { c1: c1r.to_f64(), c2: c2r.to_f64(), near_one, near_minus_one })
    }

    /// Coefficients `H_n` of `h` as a series in `sigma`; `H_1` and `H_3`
    /// vanish when `c1` and `c2` are the right constants.
    pub fn sigma_coefficients(order: usize, precision: usize) -> Result<Vec<f64>> {
        let p = precision;
        Ok(sigma_series(order, p, &c1(p), &c2(p))?.to_f64_vec())
    }

    /// `h''(z)` for `|z| <= 1`. At `z = 1` the continuous extension is used.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        if (one - z).norm() <= LOCAL_RADIUS {
            let sigma = ((one - z) * 0.5).sqrt();
            horner_complex(&self.near_one, sigma)
        } else if (one + z).norm() <= LOCAL_RADIUS {
            let u = (one + z) * 0.5;
            horner_complex(&self.near_minus_one, u) * 0.25 - self.g2(z)
        } else {
            self.direct(z)
        }
    }

    /// `h''(e^{i phi})`.
    pub fn on_circle(&self, phi: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, phi))
    }

    fn g2(&self, z: Complex64) -> Complex64 {
        let w = Complex64::new(1.0, 0.0) - z;
        let r = w.sqrt();
        -(self.c1 / 4.0) / (w * r) + (3.0 * self.c2 / 4.0) / r
    }

    /// Closed-form `h''`, valid away from `z = +-1`.
    pub fn direct(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let s = (one - z).sqrt() * (one + z).sqrt();
        let a = z.asin() + FRAC_PI_2;
        let (s2, a2) = (s * s, a * a);
        let (s3, a3) = (s2 * s, a2 * a);
        let a4 = a2 * a2;
        let zp = one + z;
        let zp2 = zp * zp;
        let t1 = -one / (s3 * a) + z / (s2 * a2) + 2.0 / (s * a3);
        let t2 = (2.0 / a2 - 8.0 * zp / (s * a3) - 2.0 * z * zp2 / (s3 * a3) + 6.0 * zp2 / (s2 * a4)) * (-FRAC_PI_2);
        t1 + t2 - self.g2(z)
    }
}

/// One-shot evaluation of `h''(e^{i phi})`; builds the local expansions at
/// `precision` bits on every call, so prefer [`HSecondDerivative`] for scans.
pub fn h_second_deriv_on_circle(phi: f64, precision: usize) -> Result<Complex64> {
    Ok(HSecondDerivative::new(DEFAULT_LOCAL_ORDER, precision)?.on_circle(phi))
}

// h(z(sigma)) with z = 1 - 2 sigma^2:
//   A = pi - 2 arcsin(sigma),  sqrt(1 - z^2) = 2 sigma sqrt(1 - sigma^2),
//   (1 + z) = 2 - 2 sigma^2,   g = sqrt(2) c1 sigma + 2 sqrt(2) c2 sigma^3.
fn sigma_series(order: usize, p: usize, c1: &Real, c2: &Real) -> Result<PowerSeries> {
    let x = PowerSeries::identity(order, p);
    let one = PowerSeries::one(order, p);
    let two = Real::from_i64(2, p);
    let pi = Real::pi(p);
    let asin = series_arcsin_shifted(order, p)?.add_constant(&-(&pi / &two));
    let a = asin.scale(&-&two).add_constant(&pi);
    let x2 = &x * &x;
    let s = (&x * &(&one - &x2).sqrt()?).scale(&two);
    let zp = (&one - &x2).scale(&two);
    let a_inv = a.recip()?;
    let f = &(&s * &a_inv) - &(&(&zp * &zp) * &(&a_inv * &a_inv)).scale(&(&pi / &two));
    let sqrt2 = two.sqrt();
    let mut gc = vec![Real::zero(p); order + 1];
    if order >= 1 {
        gc[1] = &sqrt2 * c1;
    }
    if order >= 3 {
        gc[3] = &(&two * &sqrt2) * c2;
    }
    Ok(&f - &PowerSeries::new(gc)?)
}

fn sigma_expansion(order: usize, p: usize, c1: &Real, c2: &Real) -> Result<Vec<f64>> {
    let h = sigma_series(order, p, c1, c2)?;
    // h'' = (1/16) sum_{n>=4} n (n - 2) H_n sigma^(n-4)
    Ok((4..=h.order())
        .map(|n| {
            let w = Real::from_i64((n * (n - 2)) as i64, p);
            (&(h.coeff(n) * &w) / &Real::from_i64(16, p)).to_f64()
        })
        .collect())
}

// f(z(u)) with z = 2u - 1 and Q(u) = arcsin(sqrt u)/sqrt u:
//   f = sqrt(1 - u)/Q - (pi/2) u / Q^2.
fn u_expansion(order: usize, p: usize) -> Result<Vec<f64>> {
    // arcsin has only odd powers; arcsin(s)/s = sum_k alpha_{2k+1} u^k.
    let asin = series_arcsin_shifted(2 * order + 1, p)?;
    let q_coeffs: Vec<Real> = (0..=order).map(|k| asin.coeff(2 * k + 1).clone()).collect();
    let q = PowerSeries::new(q_coeffs)?;
    let u = PowerSeries::identity(order, p);
    let one = PowerSeries::one(order, p);
    let q_inv = q.recip()?;
    let half_pi = &Real::pi(p) / &Real::from_i64(2, p);
    let f = &(&(&one - &u).sqrt()? * &q_inv) - &(&u * &(&q_inv * &q_inv)).scale(&half_pi);
    Ok(f.derivative().derivative().to_f64_vec())
}

/// Result of scanning `|h''|` over equally spaced angles of the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CircleScan {
    pub samples: usize,
    pub max_abs: f64,
    pub argmax_phi: f64,
}

/// Maximum of `|h''(e^{i phi})|` over `phi = 2 pi k / samples`.
pub fn scan_circle(eval: &HSecondDerivative, samples: usize) -> CircleScan {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..samples {
        let phi = 2.0 * PI * k as f64 / samples as f64;
        let v = eval.on_circle(phi).norm();
        if v > best.0 {
            best = (v, phi);
        }
    }
    CircleScan { samples, max_abs: best.0, argmax_phi: best.1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evaluator() -> HSecondDerivative {
        HSecondDerivative::new(DEFAULT_LOCAL_ORDER, 128).unwrap()
    }

    #[test]
    fn value_at_one_matches_closed_form() {
        let expected = -1.0 / PI - 2.0 / (3.0 * PI * PI) + 20.0 / PI.powi(3) + 8.0 / PI.powi(4) - 80.0 / PI.powi(5);
        let got = evaluator().on_circle(0.0);
        assert!((got.re - expected).abs() < 1e-13, "{got} vs {expected}");
        assert!(got.im.abs() < 1e-15);
        assert!(got.norm() < 0.08);
    }

    #[test]
    fn odd_low_order_terms_cancel() {
        let h = HSecondDerivative::sigma_coefficients(12, 128).unwrap();
        assert!(h[1].abs() < 1e-30, "H1 = {}", h[1]);
        assert!(h[3].abs() < 1e-30, "H3 = {}", h[3]);
        assert!(h[2].abs() > 1e-3);
    }

    #[test]
    fn representations_agree_on_overlaps() {
        let e = evaluator();
        let one = Complex64::new(1.0, 0.0);
        for k in 0..24 {
            let theta = 2.0 * PI * f64::from(k) / 24.0;
            for r in [0.3, 0.45] {
                let dz = Complex64::from_polar(r, theta);
                for z in [one - dz, -one + dz] {
                    if z.norm() > 1.0 {
                        continue;
                    }
                    let a = e.eval(z);
                    let b = e.direct(z);
                    assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()), "z={z}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let e = evaluator();
        for k in 1..50 {
            let phi = 0.123 * f64::from(k);
            let a = e.on_circle(phi);
            let b = e.on_circle(-phi);
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn continuous_at_minus_one() {
        let e = evaluator();
        let at = e.on_circle(PI);
        assert!(at.re.is_finite() && at.im.abs() < 1e-14);
        for eps in [1e-3, 1e-6] {
            assert!((e.on_circle(PI - eps) - at).norm() < 10.0 * eps.sqrt());
        }
    }

    #[test]
    fn direct_form_is_the_second_derivative() {
        // Central differences of h on the real axis inside the disc.
        let (c1v, c2v) = (c1(128).to_f64(), c2(128).to_f64());
        let h = |x: f64| {
            let a = x.asin() + FRAC_PI_2;
            let f = (1.0 - x * x).sqrt() / a - FRAC_PI_2 * (1.0 + x).powi(2) / (a * a);
            f - c1v * (1.0 - x).sqrt() - c2v * (1.0 - x).powf(1.5)
        };
        let e = evaluator();
        for x in [-0.3, 0.0, 0.2, 0.45] {
            let step = 1e-4;
            let fd = (h(x + step) - 2.0 * h(x) + h(x - step)) / (step * step);
            let got = e.direct(Complex64::new(x, 0.0));
            assert!((got.re - fd).abs() < 1e-5, "x={x}: {got} vs {fd}");
        }
    }

    #[test]
    fn circle_maximum_sits_at_one() {
        let scan = scan_circle(&evaluator(), 720);
        assert!(scan.max_abs < 0.182);
        assert_eq!(scan.argmax_phi, 0.0);
    }
}
