//! Numerical verification that `f_0` and `g_0` are absolutely monotone on
//! `[0, 1]`, i.e. have only nonnegative Taylor coefficients at the origin.

use serde::{Deserialize, Serialize};

use super::circle::{scan_circle, CircleScan, HSecondDerivative, DEFAULT_LOCAL_ORDER};
use super::real::DEFAULT_PRECISION;
use super::taylor::{crossover_bounds, g_series_coeffs, taylor_f0, taylor_g0, CrossoverBound, H2_CIRCLE_BOUND};
use crate::{Error, Result};

/// Index from which the crossover bounds take over from direct coefficients.
pub const CROSSOVER_INDEX: usize = 30;

/// Minimum number of angles in the scan of `|h''|` over the unit circle.
pub const MIN_CIRCLE_SAMPLES: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesFunction {
    F0,
    G0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotonicityVerdict {
    VerifiedToOrder(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityConfig {
    pub precision: usize,
    pub circle_samples: usize,
    pub local_order: usize,
}

impl Default for MonotonicityConfig {
    fn default() -> Self {
        Self { precision: DEFAULT_PRECISION, circle_samples: MIN_CIRCLE_SAMPLES, local_order: DEFAULT_LOCAL_ORDER }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub function: SeriesFunction,
    pub order: usize,
    pub precision_bits: usize,
    pub coefficients: Vec<f64>,
    pub min_coefficient: f64,
    pub min_index: usize,
    /// Coefficients above `-tolerance` count as nonnegative.
    pub tolerance: f64,
    /// Per-index bounds for `30 <= n <= order`; only for `f0`, whose proof
    /// the bounds belong to.
    pub crossover: Vec<CrossoverBound>,
    /// Smallest `a_n / a_n_lower` over `6 <= n <= order`, for `f0`.
    pub a_lower_margin: Option<f64>,
    pub circle: Option<CircleScan>,
    pub verdict: MonotonicityVerdict,
}

/// Coefficient tolerance for a given working precision: half the bits are
/// budgeted for cancellation in the series divisions.
pub fn coefficient_tolerance(precision: usize) -> f64 {
    2f64.powi(-(precision as i32) / 2)
}

/// Checks the coefficients of `function` up to `order`.
///
/// For `f0`: coefficients `n < 30` directly, the crossover predicate for
/// `30 <= n <= order`, the actual `a_n` against their lower bound, and the
/// circle maximum of `|h''|` against `0.182`. For `g0` every coefficient up to
/// `order` is checked directly. Any failure is returned as
/// [`Error::Verification`].
pub fn verify_absolute_monotonicity(
    function: SeriesFunction,
    order: usize,
    cfg: &MonotonicityConfig,
) -> Result<MonotonicityReport> {
    if order < CROSSOVER_INDEX {
        return Err(Error::Precondition(format!("order must be at least {CROSSOVER_INDEX}, got {order}")));
    }
    let p = cfg.precision;
    let series = match function {
        SeriesFunction::F0 => taylor_f0(order, p)?,
        SeriesFunction::G0 => taylor_g0(order, p)?,
    };
    let coefficients = series.to_f64_vec();
    let tolerance = coefficient_tolerance(p);
    let (min_index, min_coefficient) = coefficients
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");

    let direct_upto = match function {
        SeriesFunction::F0 => CROSSOVER_INDEX - 1,
        SeriesFunction::G0 => order,
    };
    if let Some((n, c)) = coefficients.iter().enumerate().take(direct_upto + 1).find(|(_, &c)| c < -tolerance) {
        return Err(Error::Verification(format!("{function:?} coefficient {n} is {c:e}")));
    }

    let mut crossover = Vec::new();
    let mut a_lower_margin = None;
    let mut circle = None;
    if function == SeriesFunction::F0 {
        for n in CROSSOVER_INDEX..=order {
            let b = crossover_bounds(n)?;
            if !b.dominates {
                return Err(Error::Verification(format!("crossover bound fails at n = {n}")));
            }
            crossover.push(b);
        }
        let a = g_series_coeffs(order, p).to_f64_vec();
        let margin = (6..=order)
            .map(|n| a[n] / crossover_bounds(n).map(|b| b.a_n_lower).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, f64::min);
        if !(margin > 1.0) {
            return Err(Error::Verification(format!("a_n falls below its lower bound (ratio {margin})")));
        }
        a_lower_margin = Some(margin);

        let samples = cfg.circle_samples.max(MIN_CIRCLE_SAMPLES);
        let scan = scan_circle(&HSecondDerivative::new(cfg.local_order, p)?, samples);
        if !(scan.max_abs < H2_CIRCLE_BOUND) {
            return Err(Error::Verification(format!(
                "max |h''| on the unit circle is {} at phi = {}",
                scan.max_abs, scan.argmax_phi
            )));
        }
        circle = Some(scan);
    }

    Ok(MonotonicityReport {
        function,
        order,
        precision_bits: p,
        coefficients,
        min_coefficient,
        min_index,
        tolerance,
        crossover,
        a_lower_margin,
        circle,
        verdict: MonotonicityVerdict::VerifiedToOrder(order),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f0_and_g0_verified_to_sixty() {
        let cfg = MonotonicityConfig::default();
        let f = verify_absolute_monotonicity(SeriesFunction::F0, 60, &cfg).unwrap();
        assert_eq!(f.verdict, MonotonicityVerdict::VerifiedToOrder(60));
        assert_eq!(f.crossover.len(), 31);
        assert!(f.circle.unwrap().max_abs < 0.08);
        assert_eq!(f.min_index, 0);
        let g = verify_absolute_monotonicity(SeriesFunction::G0, 60, &cfg).unwrap();
        assert!(g.crossover.is_empty() && g.circle.is_none());
        assert!(g.coefficients[1] > 0.36);
    }

    #[test]
    fn order_below_crossover_is_rejected() {
        let cfg = MonotonicityConfig::default();
        assert!(matches!(
            verify_absolute_monotonicity(SeriesFunction::F0, 29, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn report_serializes() {
        let cfg = MonotonicityConfig { circle_samples: 720, ..Default::default() };
        let r = verify_absolute_monotonicity(SeriesFunction::G0, 30, &cfg).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"verified-to-order\":30"));
    }
}
