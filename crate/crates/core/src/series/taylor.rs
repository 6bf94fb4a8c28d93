//! Taylor expansions at the origin of the threshold-zero mark covariance
//! `f_0` and mark correlation `g_0`, and of the comparison function
//! `g(z) = c1 (1 - z)^(1/2) + c2 (1 - z)^(3/2)` that captures the branch
//! point of `f_0` at `z = 1`.

use serde::{Deserialize, Serialize};

use super::power::PowerSeries;
use super::real::Real;
use crate::{Error, Result};

fn require_order(order: usize) -> Result<()> {
    if order == 0 {
        Err(Error::Precondition("series order must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `arcsin(x) + pi/2`, from term-wise integration of `(1 - x^2)^(-1/2)`.
pub fn series_arcsin_shifted(order: usize, precision: usize) -> Result<PowerSeries> {
    require_order(order)?;
    let x = PowerSeries::identity(order, precision);
    let one = PowerSeries::one(order, precision);
    let derivative = (&one - &(&x * &x)).sqrt()?.recip()?;
    let half_pi = &Real::pi(precision) / &Real::from_i64(2, precision);
    Ok(derivative.integrate(half_pi))
}

struct Pieces {
    x: PowerSeries,
    /// `arcsin(x) + pi/2`
    a: PowerSeries,
    /// `sqrt(1 - x^2)`
    s: PowerSeries,
    /// `(pi/2) (1 + x)^2`
    q: PowerSeries,
}

fn pieces(order: usize, precision: usize) -> Result<Pieces> {
    let x = PowerSeries::identity(order, precision);
    let one = PowerSeries::one(order, precision);
    let a = series_arcsin_shifted(order, precision)?;
    let s = (&one - &(&x * &x)).sqrt()?;
    let one_plus = &one + &x;
    let half_pi = &Real::pi(precision) / &Real::from_i64(2, precision);
    let q = (&one_plus * &one_plus).scale(&half_pi);
    Ok(Pieces { x, a, s, q })
}

/// Taylor coefficients of `f_0(x) = x + sqrt(1-x^2)/A - (pi/2)(1+x)^2/A^2`
/// with `A = arcsin(x) + pi/2`.
pub fn taylor_f0(order: usize, precision: usize) -> Result<PowerSeries> {
    require_order(order)?;
    let Pieces { x, a, s, q } = pieces(order, precision)?;
    let a_inv = a.recip()?;
    let first = &s * &a_inv;
    let second = &q * &(&a_inv * &a_inv);
    Ok(&(&x + &first) - &second)
}

/// Taylor coefficients of the threshold-zero mark correlation
/// `g_0 = (x A^2 + S A - Q) / (A^2 + x S A - Q)`.
pub fn taylor_g0(order: usize, precision: usize) -> Result<PowerSeries> {
    require_order(order)?;
    let Pieces { x, a, s, q } = pieces(order, precision)?;
    let a2 = &a * &a;
    let sa = &s * &a;
    let num = &(&(&x * &a2) + &sa) - &q;
    let den = &(&a2 + &(&x * &sa)) - &q;
    num.div(&den)
}

/// `c1 = -sqrt(2) (4/pi^2 - 1/pi)`
pub fn c1(precision: usize) -> Real {
    let pi = Real::pi(precision);
    let sqrt2 = Real::from_i64(2, precision).sqrt();
    let inner = &(&Real::from_i64(4, precision) / &(&pi * &pi)) - &(&Real::one(precision) / &pi);
    -(&sqrt2 * &inner)
}

/// `c2 = sqrt(2) (-1/(4 pi) + 11/(3 pi^2) + 2/pi^3 - 16/pi^4)`
pub fn c2(precision: usize) -> Real {
    let p = precision;
    let pi = Real::pi(p);
    let pi2 = &pi * &pi;
    let pi3 = &pi2 * &pi;
    let pi4 = &pi2 * &pi2;
    let sqrt2 = Real::from_i64(2, p).sqrt();
    let inner = -(&Real::one(p) / &(&Real::from_i64(4, p) * &pi))
        + &Real::from_i64(11, p) / &(&Real::from_i64(3, p) * &pi2)
        + &Real::from_i64(2, p) / &pi3
        - &Real::from_i64(16, p) / &pi4;
    &sqrt2 * &inner
}

/// Taylor coefficients `a_n` of `g(z) = c1 (1 - z)^(1/2) + c2 (1 - z)^(3/2)`.
pub fn g_series_coeffs(order: usize, precision: usize) -> PowerSeries {
    let p = precision;
    let (c1, c2) = (c1(p), c2(p));
    let half = Real::ratio(1, 2, p);
    let mut coeffs = vec![&c1 + &c2];
    if order >= 1 {
        let three_halves = Real::ratio(3, 2, p);
        coeffs.push(-(&(&c1 * &half) + &(&c2 * &three_halves)));
    }
    // beta_n = (2n-2)! / (n! (n-1)! 2^(2n-1)),  gamma_n = (2n-4)! / (n! (n-2)! 2^(2n-2))
    let mut beta = half.clone();
    let mut gamma = Real::ratio(1, 8, p);
    let three = Real::from_i64(3, p);
    for n in 2..=order {
        let k = n as i64 - 1;
        beta = &beta * &Real::ratio(2 * k - 1, 2 * (k + 1), p);
        if n > 2 {
            gamma = &gamma * &Real::ratio(2 * k - 3, 2 * (k + 1), p);
        }
        coeffs.push(&(&three * &(&c2 * &gamma)) - &(&c1 * &beta));
    }
    PowerSeries::new(coeffs).expect("nonempty")
}

/// Lower bound on `a_n` and upper bound on `|b_n|`, the Taylor coefficients
/// of `g` and of `h = f_0 - x - g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverBound {
    pub n: usize,
    /// `(4 - pi) / (pi^2 sqrt(2 pi)) n^(-3/2)`, a valid bound for `n >= 6`.
    pub a_n_lower: f64,
    /// `0.182 / (n (n - 1))`
    pub b_n_upper: f64,
    pub a_bound_valid: bool,
    /// `a_n_lower > b_n_upper`, which forces the coefficient of `f_0` to be
    /// positive.
    pub dominates: bool,
}

/// Bound on `max |h''|` over the unit circle used by [`crossover_bounds`].
pub const H2_CIRCLE_BOUND: f64 = 0.182;

pub fn crossover_bounds(n: usize) -> Result<CrossoverBound> {
    if n < 2 {
        return Err(Error::Precondition(format!("crossover bounds need n >= 2, got {n}")));
    }
    use std::f64::consts::PI;
    let nf = n as f64;
    let a_n_lower = (4.0 - PI) / (PI * PI * (2.0 * PI).sqrt()) * nf.powf(-1.5);
    let b_n_upper = H2_CIRCLE_BOUND / (nf * (nf - 1.0));
    Ok(CrossoverBound { n, a_n_lower, b_n_upper, a_bound_valid: n >= 6, dominates: a_n_lower > b_n_upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const P: usize = 128;

    fn f0_scalar(x: f64) -> f64 {
        let a = x.asin() + PI / 2.0;
        x + (1.0 - x * x).sqrt() / a - PI / 2.0 * (1.0 + x).powi(2) / (a * a)
    }

    #[test]
    fn arcsin_coefficients() {
        let s = series_arcsin_shifted(9, P).unwrap().to_f64_vec();
        assert_eq!(s[0], PI / 2.0);
        assert_eq!(s[1], 1.0);
        assert!((s[3] - 1.0 / 6.0).abs() < 1e-16);
        assert!((s[5] - 3.0 / 40.0).abs() < 1e-16);
        assert!((s[7] - 15.0 / 336.0).abs() < 1e-16);
        for k in [2, 4, 6, 8] {
            assert_eq!(s[k], 0.0);
        }
    }

    #[test]
    fn f0_matches_finite_difference_and_partial_sums() {
        let f = taylor_f0(80, P).unwrap();
        assert!(f.coeff(0).to_f64().abs() < 1e-35);
        let h = 1e-4;
        let fd = (f0_scalar(h) - f0_scalar(-h)) / (2.0 * h);
        assert!((f.coeff(1).to_f64() - fd).abs() < 1e-8);
        for x in [0.1f64, 0.5, 0.9] {
            let c = f.to_f64_vec();
            let tail = 2.0 * c[80].abs() * x.powi(81) / (1.0 - x);
            assert!((f.eval_f64(x) - f0_scalar(x)).abs() <= tail + 1e-14, "x={x}");
        }
    }

    #[test]
    fn reference_constants() {
        let (a, b) = (c1(P).to_f64(), c2(P).to_f64());
        assert!((a + 2f64.sqrt() * (4.0 / (PI * PI) - 1.0 / PI)).abs() < 1e-16);
        assert!(a < 0.0 && b > 0.0);
        assert!((a + 0.123_001_0).abs() < 1e-6);
        assert!((b - 0.271_784_8).abs() < 1e-6);
    }

    fn binomial_oracle(alpha: f64, n: usize) -> f64 {
        // (-1)^n binom(alpha, n), the coefficient of z^n in (1 - z)^alpha.
        (0..n).fold(1.0, |acc, k| acc * (k as f64 - alpha) / (k as f64 + 1.0))
    }

    #[test]
    fn g_coefficients_match_generic_binomial_expansion() {
        let g = g_series_coeffs(12, P).to_f64_vec();
        let (a, b) = (c1(P).to_f64(), c2(P).to_f64());
        for n in 0..=12 {
            let oracle = a * binomial_oracle(0.5, n) + b * binomial_oracle(1.5, n);
            assert!((g[n] - oracle).abs() < 1e-15, "n={n}: {} vs {oracle}", g[n]);
        }
    }

    #[test]
    fn crossover_at_thirty() {
        let b30 = crossover_bounds(30).unwrap();
        assert!(b30.dominates && b30.a_bound_valid);
        assert!(!crossover_bounds(29).unwrap().dominates);
        let b6 = crossover_bounds(6).unwrap();
        assert!(b6.a_n_lower > 0.0 && b6.b_n_upper > 0.0 && b6.a_n_lower.is_finite());
        assert!(crossover_bounds(1000).unwrap().dominates);
        assert!(crossover_bounds(1).is_err());
    }

    #[test]
    fn order_zero_is_rejected() {
        assert!(taylor_f0(0, P).is_err());
        assert!(taylor_g0(0, P).is_err());
        assert!(series_arcsin_shifted(0, P).is_err());
    }
}
