//! Numerical tests of positive definiteness and conditional negative
//! definiteness.
//!
//! Every test here checks a necessary condition only. A passing function is
//! reported as "consistent" with the property; a failing one comes with a
//! concrete witness that can be re-evaluated.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate_with_breaks, QuadConfig};
use crate::{Error, Result};

/// Default relative tolerance for sign decisions.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FourierPeriodic,
    GramMatrix,
    MaxAtOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PdConsistent,
    NotPd,
    CndConsistent,
    NotCnd,
}

/// Scaling of the cosine coefficients `int_0^P f(r) cos(2 pi n r / P) dr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// The bare integral. With this scaling the first coefficient of
    /// `exp(-gamma)` for the threshold-zero model with `R = cos` is about
    /// `-0.0336`, and the zeroth coefficient of a 1-periodic function is its
    /// integral over one period.
    #[default]
    Raw,
    /// The integral divided by `P`; `cos` on `[0, 2 pi]` has coefficient 1/2.
    Mean,
    /// Classical Fourier scaling: `1/P` for `n = 0`, `2/P` otherwise.
    Classical,
}

impl Normalization {
    fn factor(self, n: usize, period: f64) -> f64 {
        match self {
            Normalization::Raw => 1.0,
            Normalization::Mean => 1.0 / period,
            Normalization::Classical if n == 0 => 1.0 / period,
            Normalization::Classical => 2.0 / period,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec {
    pub period: f64,
    pub n_max: usize,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub spec: FourierSpec,
    pub coefficients: Vec<f64>,
    /// Quadrature error estimates, scaled like the coefficients.
    pub errors: Vec<f64>,
}

fn quad_cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
}

fn cosine_coefficient<F: Fn(f64) -> f64>(f: &F, spec: &FourierSpec, n: usize, breaks: &[f64]) -> Result<(f64, f64)> {
    let w = 2.0 * PI * n as f64 / spec.period;
    // Split every period of the cosine so no panel has to resolve many oscillations.
    let mut all_breaks: Vec<f64> = breaks.to_vec();
    let pieces = 4 * n.max(1);
    all_breaks.extend((1..pieces).map(|k| spec.period * k as f64 / pieces as f64));
    let r = integrate_with_breaks(|x| f(x) * (w * x).cos(), 0.0, spec.period, &all_breaks, &quad_cfg())?;
    let scale = spec.normalization.factor(n, spec.period);
    Ok((r.value * scale, r.error * scale))
}

/// Cosine coefficients `0..=n_max` of `f` over one period by adaptive
/// quadrature; `breaks` lists known kinks of `f` inside `(0, period)`.
pub fn fourier_coefficients<F: Fn(f64) -> f64>(f: F, spec: FourierSpec, breaks: &[f64]) -> Result<FourierCoefficients> {
    if !(spec.period.is_finite() && spec.period > 0.0) {
        return Err(Error::Domain(format!("period must be positive, got {}", spec.period)));
    }
    let mut coefficients = Vec::with_capacity(spec.n_max + 1);
    let mut errors = Vec::with_capacity(spec.n_max + 1);
    for n in 0..=spec.n_max {
        let (c, e) = cosine_coefficient(&f, &spec, n, breaks)?;
        coefficients.push(c);
        errors.push(e);
    }
    Ok(FourierCoefficients { spec, coefficients, errors })
}

/// Evidence attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Fourier { spec: FourierSpec, index: usize, coefficient: f64 },
    Gram { points: Vec<Vec<f64>>, min_eigenvalue: f64 },
    MaxAtOrigin { r: f64, value: f64, excess: f64 },
}

impl Witness {
    /// Recomputes the witnessed quantity for `f`: the Fourier coefficient, the
    /// smallest Gram eigenvalue, or `|f(r)| - f(0)`.
    pub fn reevaluate<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Result<f64> {
        match self {
            Witness::Fourier { spec, index, .. } => Ok(cosine_coefficient(&f, spec, *index, breaks)?.0),
            Witness::Gram { points, .. } => Ok(min_gram_eigenvalue(&f, points)?.0),
            Witness::MaxAtOrigin { r, .. } => Ok(f(*r).abs() - f(0.0)),
        }
    }

    /// The signed amount by which the property is violated (negative
    /// coefficient or eigenvalue, positive excess).
    pub fn magnitude(&self) -> f64 {
        match self {
            Witness::Fourier { coefficient, .. } => -coefficient,
            Witness::Gram { min_eigenvalue, .. } => -min_eigenvalue,
            Witness::MaxAtOrigin { excess, .. } => *excess,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessReport {
    pub method: Method,
    pub verdict: Verdict,
    /// Absolute threshold the violation had to exceed.
    pub threshold: f64,
    /// The most adverse observation; for a "consistent" verdict it records
    /// how close the test came to failing.
    pub witness: Witness,
    /// Parameter `s` of `exp(-s gamma)` for conditional negative definiteness
    /// reports.
    pub s: Option<f64>,
}

impl DefinitenessReport {
    pub fn is_violation(&self) -> bool {
        matches!(self.verdict, Verdict::NotPd | Verdict::NotCnd)
    }
}

/// Positive definiteness on the circle of circumference `period`: all cosine
/// coefficients of an even periodic function must be nonnegative.
pub fn fourier_pd_test<F: Fn(f64) -> f64>(
    f: F,
    spec: FourierSpec,
    breaks: &[f64],
    tolerance: f64,
) -> Result<DefinitenessReport> {
    let fc = fourier_coefficients(&f, spec, breaks)?;
    let scale = fc.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let threshold = tolerance * scale.max(f64::MIN_POSITIVE);
    let (index, coefficient) = fc
        .coefficients
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n_max >= 0");
    let verdict = if coefficient < -threshold { Verdict::NotPd } else { Verdict::PdConsistent };
    Ok(DefinitenessReport {
        method: Method::FourierPeriodic,
        verdict,
        threshold,
        witness: Witness::Fourier { spec, index, coefficient },
        s: None,
    })
}

fn gram_matrix<F: Fn(f64) -> f64>(f: &F, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Domain("points must share one dimension".into()));
    }
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let dist = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let v = f(dist);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("f({dist})")));
            }
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn min_gram_eigenvalue<F: Fn(f64) -> f64>(f: &F, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let m = gram_matrix(f, points)?;
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((min, scale))
}

/// Smallest eigenvalue of the matrix `f(|x_i - x_j|)`.
pub fn gram_pd_test<F: Fn(f64) -> f64>(f: F, points: &[Vec<f64>], tolerance: f64) -> Result<DefinitenessReport> {
    if points.len() < 2 {
        return Err(Error::Precondition("the Gram test needs at least two points".into()));
    }
    let (min_eigenvalue, scale) = min_gram_eigenvalue(&f, points)?;
    let threshold = tolerance * scale.max(f64::MIN_POSITIVE);
    let verdict = if min_eigenvalue < -threshold { Verdict::NotPd } else { Verdict::PdConsistent };
    Ok(DefinitenessReport {
        method: Method::GramMatrix,
        verdict,
        threshold,
        witness: Witness::Gram { points: points.to_vec(), min_eigenvalue },
        s: None,
    })
}

/// A positive definite function satisfies `|f(r)| <= f(0)`; reports the grid
/// point with the largest `|f(r)| - f(0)`.
pub fn max_at_origin_test<F: Fn(f64) -> f64>(f: F, r_grid: &[f64], tolerance: f64) -> Result<DefinitenessReport> {
    if r_grid.is_empty() {
        return Err(Error::Precondition("empty grid".into()));
    }
    let f0 = f(0.0);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &r in r_grid {
        let v = f(r);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("f({r})")));
        }
        let excess = v.abs() - f0;
        if excess > best.0 {
            best = (excess, r, v);
        }
    }
    let threshold = tolerance * f0.abs().max(1.0);
    let verdict = if best.0 > threshold { Verdict::NotPd } else { Verdict::PdConsistent };
    Ok(DefinitenessReport {
        method: Method::MaxAtOrigin,
        verdict,
        threshold,
        witness: Witness::MaxAtOrigin { r: best.1, value: best.2, excess: best.0 },
        s: None,
    })
}

/// Positive definiteness test applied to `exp(-s gamma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ExpTest {
    FourierPeriodic { spec: FourierSpec, breaks: Vec<f64> },
    GramMatrix { points: Vec<Vec<f64>> },
}

/// `gamma` is conditionally negative definite iff `exp(-s gamma)` is positive
/// definite for every `s > 0`. Returns the first violating `s`, or the report
/// of the last `s` when none violates.
pub fn cnd_test_via_exponential<G: Fn(f64) -> f64>(
    gamma: G,
    s_values: &[f64],
    test: &ExpTest,
    tolerance: f64,
) -> Result<DefinitenessReport> {
    if !gamma(0.0).is_finite() {
        return Err(Error::Precondition("gamma(0) must be finite".into()));
    }
    if s_values.is_empty() || s_values.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Precondition("s values must be positive and nonempty".into()));
    }
    let mut last = None;
    for &s in s_values {
        let f = |r: f64| (-s * gamma(r)).exp();
        let mut report = match test {
            ExpTest::FourierPeriodic { spec, breaks } => fourier_pd_test(f, *spec, breaks, tolerance)?,
            ExpTest::GramMatrix { points } => gram_pd_test(f, points, tolerance)?,
        };
        report.s = Some(s);
        if report.verdict == Verdict::NotPd {
            report.verdict = Verdict::NotCnd;
            return Ok(report);
        }
        report.verdict = Verdict::CndConsistent;
        last = Some(report);
    }
    Ok(last.expect("nonempty s values"))
}

/// `q(rho) = rho + sqrt(1 - rho^2) / (arcsin rho + pi/2)`, so that the
/// threshold-zero `k_mm` equals `(pi/2) q(R(r))` and `k_mm(0) = pi/2`.
pub fn kmm_q(rho: f64) -> f64 {
    if rho <= -1.0 {
        return 0.0;
    }
    rho + ((1.0 - rho) * (1.0 + rho)).sqrt() / (-rho).acos()
}

/// `(pi^2 - 1) / (pi^2 + 1)`: above this correlation `q(rho) > 1`.
pub const KMM_EXCESS_CORRELATION: f64 = (PI * PI - 1.0) / (PI * PI + 1.0);

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(period: f64, n_max: usize, normalization: Normalization) -> FourierSpec {
        FourierSpec { period, n_max, normalization }
    }

    #[test]
    fn cosine_has_unit_impulse_coefficients() {
        let fc = fourier_coefficients(f64::cos, spec(2.0 * PI, 5, Normalization::Mean), &[]).unwrap();
        for (n, c) in fc.coefficients.iter().enumerate() {
            let expected = if n == 1 { 0.5 } else { 0.0 };
            assert!((c - expected).abs() < 1e-12, "n={n}: {c}");
        }
        let cl = fourier_coefficients(|r| (3.0 * r).cos(), spec(2.0 * PI, 4, Normalization::Classical), &[]).unwrap();
        assert!((cl.coefficients[3] - 1.0).abs() < 1e-12);
        let raw = fourier_coefficients(|_| 1.0, spec(1.0, 0, Normalization::Raw), &[]).unwrap();
        assert!((raw.coefficients[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_gram_eigenvalues() {
        let f = |r: f64| (-r).exp();
        let h = 0.7;
        let report = gram_pd_test(f, &[vec![0.0], vec![h]], DEFAULT_TOLERANCE).unwrap();
        match report.witness {
            Witness::Gram { min_eigenvalue, .. } => assert!((min_eigenvalue - (1.0 - f(h))).abs() < 1e-14),
            _ => unreachable!(),
        }
        assert_eq!(report.verdict, Verdict::PdConsistent);
        // |f(h)| > f(0) makes 1 - f(h) negative.
        let bad = gram_pd_test(|r: f64| if r == 0.0 { 1.0 } else { 1.5 }, &[vec![0.0], vec![h]], DEFAULT_TOLERANCE)
            .unwrap();
        assert_eq!(bad.verdict, Verdict::NotPd);
    }

    #[test]
    fn gaussian_kernel_is_pd_consistent() {
        let points: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let x = f64::from(i);
                vec![(x * 1.7).sin() * 2.0, (x * 0.9).cos() * 1.5]
            })
            .collect();
        let r = gram_pd_test(|r: f64| (-r * r).exp(), &points, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(r.verdict, Verdict::PdConsistent);
        assert!(gram_pd_test(|_| 1.0, &points[..1], DEFAULT_TOLERANCE).is_err());
    }

    #[test]
    fn max_at_origin_cases() {
        let grid: Vec<f64> = (0..100).map(|i| f64::from(i) * 0.1).collect();
        assert_eq!(max_at_origin_test(|_| 2.0, &grid, DEFAULT_TOLERANCE).unwrap().verdict, Verdict::PdConsistent);
        let bumped = |r: f64| (-r).exp() * (1.0 + r);
        let report = max_at_origin_test(bumped, &grid, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(report.verdict, Verdict::PdConsistent);
        let rising = |r: f64| 1.0 + r * (-r).exp();
        let report = max_at_origin_test(rising, &grid, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(report.verdict, Verdict::NotPd);
        let again = report.witness.reevaluate(rising, &[]).unwrap();
        assert!((again - report.witness.magnitude()).abs() < 1e-15);
    }

    #[test]
    fn cnd_reference_cases() {
        let points: Vec<Vec<f64>> = (0..8).map(|i| vec![f64::from(i) * 0.37]).collect();
        let test = ExpTest::GramMatrix { points };
        let square = cnd_test_via_exponential(|r| r * r, &[0.5, 1.0, 4.0], &test, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(square.verdict, Verdict::CndConsistent);
        let zero = cnd_test_via_exponential(|_| 0.0, &[1.0], &test, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(zero.verdict, Verdict::CndConsistent);
        // -r^2 is not conditionally negative definite.
        let neg = cnd_test_via_exponential(|r| -r * r, &[1.0], &test, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(neg.verdict, Verdict::NotCnd);
        assert!(cnd_test_via_exponential(|r| r, &[], &test, DEFAULT_TOLERANCE).is_err());
    }

    #[test]
    fn q_exceeds_one_only_near_full_correlation() {
        assert!((kmm_q(1.0) - 1.0).abs() < 1e-15);
        assert!((kmm_q(0.0) - 2.0 / PI).abs() < 1e-15);
        assert!(kmm_q(0.95) > 1.0);
        assert!(kmm_q(0.5) < 1.0);
        assert!(kmm_q(KMM_EXCESS_CORRELATION + 1e-9) > 1.0);
    }
}
