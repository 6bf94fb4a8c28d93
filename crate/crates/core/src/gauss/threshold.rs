//! Moments of the excursion set `{Z >= t}` of a stationary standard Gaussian
//! field, marked by the field itself.
//!
//! All functions take the correlation `rho = R(|h|)` between the two sites
//! rather than a lag, because the moments depend on the lag only through it.
//! Integrals over the correlation parameter `s` are evaluated after the
//! substitution `s = sin(theta)`, which removes the `1 / sqrt(1 - s^2)` factor
//! of the bivariate density at the ends of `[-1, 1]`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use super::covariance::{CovarianceModel, ExtendedReal};
use super::scalar::{mills_ratio, phi, psi, INV_SQRT_2PI};
use crate::quadrature::{integrate, QuadConfig};
use crate::{Error, Result};

/// Quadrature settings used by the convenience wrappers.
///
/// Every integrand handed to the quadrature here is nonnegative, so a purely
/// relative target is attainable and keeps tiny probabilities accurate.
pub fn default_quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_intervals: 2000,
    }
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold must be finite, got {t}")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain(format!("correlation must lie in [-1, 1], got {rho}")))
    }
}

// 1 + sin(theta), written so that it keeps relative precision near -pi/2.
fn one_plus_sin(theta: f64) -> f64 {
    let s = (0.5 * theta + FRAC_PI_4).sin();
    2.0 * s * s
}

// 2 pi cos(theta) phi(t, t, sin theta)
fn kernel(t2: f64, theta: f64) -> f64 {
    if t2 == 0.0 {
        return 1.0;
    }
    let d = one_plus_sin(theta);
    if d == 0.0 {
        0.0
    } else {
        (-t2 / d).exp()
    }
}

// (rho + 1) Psi(t sqrt((1 - rho) / (1 + rho))), continuous at rho = -1.
fn tail_factor(t: f64, rho: f64) -> f64 {
    if rho == -1.0 {
        0.0
    } else {
        (rho + 1.0) * psi(t * ((1.0 - rho) / (1.0 + rho)).sqrt())
    }
}

/// `P_t(-1) = P(t <= Z <= -t)`.
fn orthant_at_minus_one(t: f64) -> f64 {
    if t < 0.0 {
        1.0 - 2.0 * psi(-t)
    } else {
        0.0
    }
}

/// `C_t(-1) = -E[Z^2; t <= Z <= -t]`.
fn product_at_minus_one(t: f64) -> f64 {
    if t < 0.0 {
        let a = -t;
        2.0 * a * phi(a) - (1.0 - 2.0 * psi(a))
    } else {
        0.0
    }
}

/// Joint exceedance probability `P_t`, first moment `E_t` and product moment
/// `C_t` at one correlation value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMoments {
    pub p: f64,
    pub e: f64,
    pub c: f64,
}

/// Evaluates `P_t(rho)`, `E_t(rho)` and `C_t(rho)` together.
///
/// For `rho >= 0` the integrals run from `s = 0`, where the closed terms are
/// `Psi(t)^2` and friends. For `rho < 0` they run from `s = -1` instead, where
/// the moments are elementary; both representations are exact, but the second
/// avoids subtracting nearly equal numbers when the joint exceedance is rare.
pub fn threshold_moments_with(t: f64, rho: f64, cfg: &QuadConfig) -> Result<ThresholdMoments> {
    check_t(t)?;
    check_rho(rho)?;
    let t2 = t * t;
    let upper = rho.asin();
    let lower = if rho >= 0.0 { 0.0 } else { -FRAC_PI_2 };
    let i0 = integrate(|th| kernel(t2, th), lower, upper, cfg)?.value / (2.0 * PI);
    let i1 = integrate(|th| kernel(t2, th) * (rho - th.sin()), lower, upper, cfg)?.value / (2.0 * PI);

    let (ph, ps) = (phi(t), psi(t));
    let e = ph * tail_factor(t, rho);
    let (p, c) = if rho >= 0.0 {
        let p = ps * ps + i0;
        let c = i1 - t2 * i0 + rho * ps * ps + ph * ph + 2.0 * t * (e - ph * ps);
        (p, c)
    } else {
        let p_end = orthant_at_minus_one(t);
        let p = p_end + i0;
        let c = i1 - t2 * i0 + 2.0 * t * e + product_at_minus_one(t) + (rho + 1.0) * p_end;
        (p, c)
    };
    Ok(ThresholdMoments { p, e, c })
}

pub fn threshold_moments(t: f64, rho: f64) -> Result<ThresholdMoments> {
    threshold_moments_with(t, rho, &default_quad())
}

/// `P(Z(o) >= t, Z(h) >= t)` for correlation `rho` between the two sites.
pub fn orthant_p(t: f64, rho: f64) -> Result<f64> {
    orthant_p_with(t, rho, &default_quad())
}

pub fn orthant_p_with(t: f64, rho: f64, cfg: &QuadConfig) -> Result<f64> {
    check_t(t)?;
    check_rho(rho)?;
    let upper = rho.asin();
    let t2 = t * t;
    if rho >= 0.0 {
        let i = integrate(|th| kernel(t2, th), 0.0, upper, cfg)?.value;
        Ok(psi(t).powi(2) + i / (2.0 * PI))
    } else {
        let i = integrate(|th| kernel(t2, th), -FRAC_PI_2, upper, cfg)?.value;
        Ok(orthant_at_minus_one(t) + i / (2.0 * PI))
    }
}

/// `E[Z(o); Z(o) >= t, Z(h) >= t]`, in closed form.
pub fn e_t(t: f64, rho: f64) -> Result<f64> {
    check_t(t)?;
    check_rho(rho)?;
    Ok(phi(t) * tail_factor(t, rho))
}

/// `E[Z(o) Z(h); Z(o) >= t, Z(h) >= t]`.
pub fn c_t(t: f64, rho: f64) -> Result<f64> {
    Ok(threshold_moments(t, rho)?.c)
}

pub fn c_t_with(t: f64, rho: f64, cfg: &QuadConfig) -> Result<f64> {
    Ok(threshold_moments_with(t, rho, cfg)?.c)
}

/// `t * int_0^rho phi(t, t, s) / (1 + s) ds` by quadrature.
pub fn integral_identity_lhs(t: f64, rho: f64) -> Result<f64> {
    integral_identity_lhs_with(t, rho, &default_quad())
}

pub fn integral_identity_lhs_with(t: f64, rho: f64, cfg: &QuadConfig) -> Result<f64> {
    check_t(t)?;
    if !(rho > -1.0 && rho <= 1.0) {
        return Err(Error::Domain(format!("correlation must lie in (-1, 1], got {rho}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let t2 = t * t;
    let integrand = |th: f64| kernel(t2, th) / one_plus_sin(th);
    let i = integrate(integrand, 0.0, rho.asin(), cfg)?.value;
    Ok(t * i / (2.0 * PI))
}

/// Closed form `phi(t) [Psi(t sqrt((1 - rho)/(1 + rho))) - Psi(t)]` of the
/// same integral.
pub fn integral_identity_rhs(t: f64, rho: f64) -> Result<f64> {
    check_t(t)?;
    if !(rho > -1.0 && rho <= 1.0) {
        return Err(Error::Domain(format!("correlation must lie in (-1, 1], got {rho}")));
    }
    Ok(phi(t) * (psi(t * ((1.0 - rho) / (1.0 + rho)).sqrt()) - psi(t)))
}

/// `E[Z(o)^2; Z(o) >= 0, Z(h) >= 0]`.
pub fn v0(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let root = ((1.0 - rho) * (1.0 + rho)).sqrt();
    Ok((rho * root + (-rho).acos()) / (2.0 * PI))
}

/// The five second-order mark characteristics at threshold zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroThreshold {
    pub e: f64,
    pub cov: f64,
    pub gamma: f64,
    pub kmm: f64,
    pub cor: f64,
}

/// Mean mark `E[Z | Z >= 0]` at threshold zero.
pub const MEAN_MARK_T0: f64 = 0.797_884_560_802_865_4;

// cor(rho) for rho close to -1, as a series in s = sqrt((1 + rho) / 2).
fn cor_near_minus_one(s: f64) -> f64 {
    let s2 = s * s;
    let num = (4.0 / 3.0 - FRAC_PI_2) + s2 * (16.0 / 45.0 + s2 * 52.0 / 315.0);
    let den = (8.0 / 3.0 - FRAC_PI_2) - s2 * (16.0 / 45.0 + s2 * 8.0 / 105.0);
    num / den
}

/// Closed-form characteristics of the threshold-zero model at correlation
/// `rho`. At `rho = -1` the continuous limits are returned.
pub fn theory_t0(rho: f64) -> Result<ZeroThreshold> {
    check_rho(rho)?;
    let s = (0.5 * (1.0 + rho)).sqrt();
    if rho == -1.0 {
        return Ok(ZeroThreshold { e: 0.0, cov: 0.0, gamma: 0.0, kmm: 0.0, cor: cor_near_minus_one(0.0) });
    }
    let a = (-rho).acos();
    let root = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let q = root / a;
    let sq = (1.0 + rho) * (1.0 + rho);
    let e = FRAC_PI_2.sqrt() * (1.0 + rho) / a;
    let cov = rho + q - FRAC_PI_2 * sq / (a * a);
    let gamma = (1.0 - rho) * (1.0 - q);
    let kmm = FRAC_PI_2 * (rho + q);
    let cor = if s < 1e-2 {
        cor_near_minus_one(s)
    } else {
        let num = rho * a * a + root * a - FRAC_PI_2 * sq;
        let den = a * a + rho * root * a - FRAC_PI_2 * sq;
        num / den
    };
    Ok(ZeroThreshold { e, cov, gamma, kmm, cor })
}

/// Mark covariance at threshold zero; the function `f_0`.
pub fn f0(rho: f64) -> Result<f64> {
    Ok(theory_t0(rho)?.cov)
}

/// Mark correlation at threshold zero; the function `g_0`.
pub fn g0(rho: f64) -> Result<f64> {
    Ok(theory_t0(rho)?.cor)
}

/// Mark covariance `C_t/P_t - (E_t/P_t)^2` at threshold `t`.
pub fn f_t(t: f64, rho: f64) -> Result<f64> {
    f_t_with(t, rho, &default_quad())
}

pub fn f_t_with(t: f64, rho: f64, cfg: &QuadConfig) -> Result<f64> {
    let m = threshold_moments_with(t, rho, cfg)?;
    if !m.p.is_normal() || m.p < 0.0 {
        return Err(Error::Degenerate(format!(
            "joint exceedance probability {:e} at t = {t}, rho = {rho}",
            m.p
        )));
    }
    let mean = m.e / m.p;
    Ok(m.c / m.p - mean * mean)
}

/// A threshold and the correlation function of the underlying field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub t: f64,
    pub covariance: CovarianceModel,
}

impl ThresholdModel {
    pub fn new(t: f64, covariance: CovarianceModel) -> Result<Self> {
        check_t(t)?;
        Ok(Self { t, covariance })
    }
}

// Coefficients of (t^2 - 1) m^2 - 3 t m + 2 in powers of 1/t^2, m = Psi/phi.
const BRACKET_ASYMPTOTIC: [f64; 11] = [
    2.0,
    -30.0,
    396.0,
    -5460.0,
    81_990.0,
    -1_355_130.0,
    24_658_200.0,
    -492_224_040.0,
    10_726_591_050.0,
    -253_860_556_950.0,
    6_491_652_344_100.0,
];

/// `(t^2 - 1) m^2 - 3 t m + 2` with `m = Psi(t) / phi(t)`, so that the
/// numerator `(t^2 - 1) Psi^2 - 3 t phi Psi + 2 phi^2` equals `phi^2` times it.
pub fn derivative_bracket(t: f64) -> f64 {
    if t >= 15.0 {
        let x = 1.0 / (t * t);
        let series = BRACKET_ASYMPTOTIC.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        return series * x * x * x;
    }
    let m = mills_ratio(t);
    (t * t - 1.0) * m * m - 3.0 * t * m + 2.0
}

/// `(t^2 - 1) Psi(t)^2 - 3 t phi(t) Psi(t) + 2 phi(t)^2`.
pub fn derivative_numerator(t: f64) -> f64 {
    let ph = phi(t);
    ph * ph * derivative_bracket(t)
}

fn reject_constant(model: &ThresholdModel) -> Result<f64> {
    check_t(model.t)?;
    if model.covariance.is_constant() {
        return Err(Error::Domain("the constant correlation function is excluded".into()));
    }
    Ok(model.t)
}

/// Right derivative at `r = 0` of the mark covariance `r -> f_t(R(r))`.
pub fn cov_deriv_at_zero(model: &ThresholdModel) -> Result<ExtendedReal> {
    let t = reject_constant(model)?;
    match model.covariance.second_deriv_at_zero() {
        ExtendedReal::NegInfinity => Ok(ExtendedReal::NegInfinity),
        ExtendedReal::Finite(r2) => {
            let m = mills_ratio(t);
            let speed = (-r2).sqrt() * INV_SQRT_2PI;
            if m.is_infinite() {
                return Ok(ExtendedReal::Finite(-0.0));
            }
            Ok(ExtendedReal::Finite(-derivative_bracket(t) / (m * m * m) * speed))
        }
    }
}

/// Right derivative at `r = 0` of the set covariance `r -> P_t(R(r))`.
pub fn set_cov_deriv_at_zero(model: &ThresholdModel) -> Result<ExtendedReal> {
    let t = reject_constant(model)?;
    match model.covariance.second_deriv_at_zero() {
        ExtendedReal::NegInfinity => Ok(ExtendedReal::NegInfinity),
        ExtendedReal::Finite(r2) => Ok(ExtendedReal::Finite(-phi(t) * (-r2).sqrt() * INV_SQRT_2PI)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TS: [f64; 7] = [-2.0, -1.0, -0.3, 0.0, 0.5, 1.0, 2.0];

    #[test]
    fn orthant_special_values() {
        for t in TS {
            assert!((orthant_p(t, 0.0).unwrap() - psi(t).powi(2)).abs() < 1e-15);
            assert!((orthant_p(t, 1.0).unwrap() - psi(t)).abs() < 1e-13, "t={t}");
            assert!((orthant_p(t, -1.0).unwrap() - orthant_at_minus_one(t)).abs() < 1e-15);
        }
        for rho in [-0.9, -0.3, 0.2, 0.8] {
            let exact = (f64::asin(rho) + FRAC_PI_2) / (2.0 * PI);
            assert!((orthant_p(0.0, rho).unwrap() - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn both_anchors_agree_near_zero() {
        for t in TS {
            let below = threshold_moments(t, -1e-13).unwrap();
            let at = threshold_moments(t, 0.0).unwrap();
            assert!((below.p - at.p).abs() < 1e-12, "t={t}");
            assert!((below.c - at.c).abs() < 1e-12, "t={t}: {} vs {}", below.c, at.c);
        }
    }

    #[test]
    fn moments_at_full_correlation() {
        for t in TS {
            let m = threshold_moments(t, 1.0).unwrap();
            assert!((m.e - phi(t)).abs() < 1e-15);
            assert!((m.c - (t * phi(t) + psi(t))).abs() < 1e-12, "t={t}: {}", m.c);
        }
    }

    #[test]
    fn moments_at_zero_correlation_are_products() {
        for t in TS {
            let m = threshold_moments(t, 0.0).unwrap();
            assert!((m.e - phi(t) * psi(t)).abs() < 1e-16);
            assert!((m.c - phi(t).powi(2)).abs() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn moments_at_minus_one() {
        for t in TS {
            let m = threshold_moments(t, -1.0).unwrap();
            assert_eq!(m.e, 0.0);
            assert!((m.c - product_at_minus_one(t)).abs() < 1e-15);
        }
        // Approaching -1 from inside matches the endpoint.
        let near = threshold_moments(-0.8, -1.0 + 1e-12).unwrap();
        assert!((near.c - product_at_minus_one(-0.8)).abs() < 1e-5);
    }

    #[test]
    fn rare_joint_exceedance_keeps_relative_accuracy() {
        // Z(o), Z(h) >= 3 with rho = -0.5 has probability around 1e-8; the
        // positive tail moments must still satisfy C >= t E >= t^2 P.
        let t = 3.0;
        let m = threshold_moments(t, -0.5).unwrap();
        assert!(m.p > 0.0 && m.p < 1e-6);
        assert!(m.e >= t * m.p * (1.0 - 1e-10));
        assert!(m.c >= t * m.e * (1.0 - 1e-10));
        let f = f_t(t, -0.5).unwrap();
        assert!(f.abs() < 1.0);
    }

    #[test]
    fn integral_identity_edge_cases() {
        assert_eq!(integral_identity_lhs(1.3, 0.0).unwrap(), 0.0);
        assert_eq!(integral_identity_lhs(0.0, 0.7).unwrap(), 0.0);
        let lhs = integral_identity_lhs(1.0, 0.9).unwrap();
        let rhs = integral_identity_rhs(1.0, 0.9).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(integral_identity_lhs(1.0, -1.0).is_err());
    }

    #[test]
    fn v0_values() {
        assert!((v0(0.0).unwrap() - 0.25).abs() < 1e-16);
        assert!((v0(1.0).unwrap() - 0.5).abs() < 1e-16);
        assert_eq!(v0(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn theory_t0_special_values() {
        let z = theory_t0(0.0).unwrap();
        assert!(z.cov.abs() < 1e-16);
        assert!(z.cor.abs() < 1e-16);
        let one = theory_t0(1.0).unwrap();
        assert!((one.e - MEAN_MARK_T0).abs() < 1e-15);
        assert!((one.kmm - FRAC_PI_2).abs() < 1e-15);
        assert!((one.cov - (1.0 - 2.0 / PI)).abs() < 1e-15);
        assert!((one.cor - 1.0).abs() < 1e-15);
        assert!(one.gamma.abs() < 1e-16);
        assert!((MEAN_MARK_T0 - (2.0 / PI).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn cor_is_continuous_at_the_series_switch() {
        let s = 1e-2;
        let rho: f64 = 2.0 * s * s - 1.0;
        let a = (-rho).acos();
        let root = ((1.0 - rho) * (1.0 + rho)).sqrt();
        let sq = (1.0 + rho) * (1.0 + rho);
        let direct = (rho * a * a + root * a - FRAC_PI_2 * sq) / (a * a + rho * root * a - FRAC_PI_2 * sq);
        assert!((direct - cor_near_minus_one(s)).abs() < 1e-10);
        let limit = (8.0 - 3.0 * PI) / (16.0 - 3.0 * PI);
        assert!((theory_t0(-1.0).unwrap().cor - limit).abs() < 1e-15);
    }

    #[test]
    fn f_t_at_zero_threshold_matches_closed_form() {
        for i in -99..=100 {
            let rho = f64::from(i) / 100.0;
            let a = f_t(0.0, rho).unwrap();
            let b = f0(rho).unwrap();
            assert!((a - b).abs() < 1e-12, "rho={rho}: {a} vs {b}");
        }
    }

    #[test]
    fn f_t_degenerate_when_probability_vanishes() {
        assert!(matches!(f_t(40.0, -0.99), Err(Error::Degenerate(_))));
        assert!(matches!(f_t(1.0, -1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bracket_branches_agree_at_switch() {
        let t: f64 = 15.0;
        let m = mills_ratio(t);
        let direct = (t * t - 1.0) * m * m - 3.0 * t * m + 2.0;
        let series = derivative_bracket(t);
        assert!(((direct - series) / series).abs() < 1e-7, "{direct} vs {series}");
    }

    #[test]
    fn derivative_numerator_positive() {
        for i in -1000..=1000 {
            let t = f64::from(i) / 100.0;
            assert!(derivative_numerator(t) > 0.0, "t={t}");
            assert!(derivative_bracket(t) > 0.0, "t={t}");
        }
    }

    #[test]
    fn derivative_signs_and_exclusions() {
        let gauss = ThresholdModel::new(0.0, CovarianceModel::gaussian(1.0).unwrap()).unwrap();
        let set = set_cov_deriv_at_zero(&gauss).unwrap().to_f64();
        assert!((set + 2f64.sqrt() / (2.0 * PI)).abs() < 1e-15);
        assert!(cov_deriv_at_zero(&gauss).unwrap().to_f64() < 0.0);

        let expo = ThresholdModel::new(0.5, CovarianceModel::exponential(1.0).unwrap()).unwrap();
        assert_eq!(cov_deriv_at_zero(&expo).unwrap(), ExtendedReal::NegInfinity);
        assert_eq!(set_cov_deriv_at_zero(&expo).unwrap(), ExtendedReal::NegInfinity);

        let flat = ThresholdModel::new(0.0, CovarianceModel::constant()).unwrap();
        assert!(cov_deriv_at_zero(&flat).is_err());
        assert!(set_cov_deriv_at_zero(&flat).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(orthant_p(0.0, 1.0 + 1e-12).is_err());
        assert!(e_t(f64::NAN, 0.0).is_err());
        assert!(theory_t0(-1.5).is_err());
        assert!(ThresholdModel::new(f64::INFINITY, CovarianceModel::constant()).is_err());
    }
}
