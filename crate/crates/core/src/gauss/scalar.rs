//! Standard normal density, upper tail and bivariate density.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::{Error, Result};

/// `1 / sqrt(2 pi)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_9;

/// Beyond this `|t|` the upper tail is obtained from the Mills ratio instead of
/// `erfc`, so that ratios such as `Psi / phi` keep full relative precision.
const TAIL_SWITCH: f64 = 6.0;

/// Standard normal density.
pub fn phi(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Upper tail probability `P(Z >= t)` of a standard normal variable.
pub fn psi(t: f64) -> f64 {
    if t.is_nan() {
        f64::NAN
    } else if t > TAIL_SWITCH {
        phi(t) * mills_continued_fraction(t)
    } else if t < -TAIL_SWITCH {
        1.0 - psi(-t)
    } else {
        0.5 * libm::erfc(t * FRAC_1_SQRT_2)
    }
}

/// Mills ratio `Psi(t) / phi(t)`.
///
/// Accurate for large positive `t` where both numerator and denominator
/// underflow; returns `+inf` once `phi(t)` underflows for very negative `t`.
pub fn mills_ratio(t: f64) -> f64 {
    if t > TAIL_SWITCH {
        mills_continued_fraction(t)
    } else {
        psi(t) / phi(t)
    }
}

// Laplace continued fraction 1/(t + 1/(t + 2/(t + 3/(t + ...)))),
// evaluated backwards. 80 levels are far more than needed for t > 6.
fn mills_continued_fraction(t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let mut tail = t;
    for k in (1..=80).rev() {
        tail = t + f64::from(k) / tail;
    }
    1.0 / tail
}

/// Density of the standard bivariate normal distribution with correlation `rho`.
pub fn biv_density(s: f64, t: f64, rho: f64) -> Result<f64> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "bivariate density needs correlation in (-1, 1), got {rho}"
        )));
    }
    let one_minus = (1.0 - rho) * (1.0 + rho);
    let q = (s * s - 2.0 * rho * s * t + t * t) / (2.0 * one_minus);
    Ok((-q).exp() / (2.0 * PI * one_minus.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert!((phi(0.0) - 0.398_942_3).abs() < 1e-7);
        assert_eq!(psi(0.0), 0.5);
        assert!((biv_density(0.0, 0.0, 0.0).unwrap() - 0.159_154_9).abs() < 1e-7);
    }

    #[test]
    fn tail_limits() {
        assert_eq!(psi(f64::INFINITY), 0.0);
        assert_eq!(psi(f64::NEG_INFINITY), 1.0);
        assert!(phi(30.0) > 0.0);
    }

    #[test]
    fn tail_is_continuous_across_the_switch() {
        let below = 0.5 * libm::erfc(TAIL_SWITCH * FRAC_1_SQRT_2);
        let above = phi(TAIL_SWITCH) * mills_continued_fraction(TAIL_SWITCH);
        assert!(((below - above) / below).abs() < 1e-13, "{below} vs {above}");
        let t = -TAIL_SWITCH - 1e-9;
        assert!((psi(t) - (1.0 - psi(-t))).abs() < 1e-16);
    }

    #[test]
    fn mills_ratio_matches_asymptotic_series_far_out() {
        // Psi/phi = 1/t - 1/t^3 + 3/t^5 - 15/t^7 + 105/t^9 - ..., alternating bounds.
        for t in [8.0f64, 12.0, 40.0, 1e3] {
            let m = mills_ratio(t);
            let lower = 1.0 / t - t.powi(-3) + 3.0 * t.powi(-5) - 15.0 * t.powi(-7);
            let upper = lower + 105.0 * t.powi(-9);
            assert!(m >= lower * (1.0 - 1e-15) && m <= upper * (1.0 + 1e-15), "t={t}: {m}");
        }
    }

    #[test]
    fn known_tail_values() {
        // Reference values from high-precision evaluation of erfc.
        let cases = [
            (1.0, 0.158_655_253_931_457_05),
            (2.0, 0.022_750_131_948_179_21),
            (-1.5, 0.933_192_798_731_141_9),
            (7.0, 1.279_812_543_885_835e-12),
            (10.0, 7.619_853_024_160_527e-24),
        ];
        for (t, expected) in cases {
            let got = psi(t);
            assert!(((got - expected) / expected).abs() < 1e-13, "t={t}: {got} vs {expected}");
        }
    }

    #[test]
    fn bivariate_density_symmetry_and_domain() {
        let a = biv_density(0.3, -1.2, 0.7).unwrap();
        let b = biv_density(-1.2, 0.3, 0.7).unwrap();
        assert_eq!(a, b);
        assert!(matches!(biv_density(0.0, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(biv_density(0.0, 0.0, -1.0), Err(Error::Domain(_))));
        assert!(biv_density(0.0, 0.0, f64::NAN).is_err());
    }
}
