//! Stationary isotropic correlation functions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A real number or `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendedReal {
    Finite(f64),
    NegInfinity,
}

impl ExtendedReal {
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(x) => x,
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }
}

impl std::fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// Half-integer Matérn smoothness orders, which have elementary closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaternSmoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

/// Parametric family of a correlation function. `scale` is a length scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovarianceFamily {
    /// `exp(-(r/scale)^2)`
    Gaussian { scale: f64 },
    /// `exp(-r/scale)`
    Exponential { scale: f64 },
    /// `cos(r/scale)`
    Cosine { scale: f64 },
    Matern { smoothness: MaternSmoothness, scale: f64 },
    /// `R = 1`
    Constant,
    /// Piecewise linear through `(r[i], values[i])`, held constant beyond the
    /// last node. The curvature at the origin cannot be recovered from a table
    /// and is supplied by the user.
    Tabulated {
        r: Vec<f64>,
        values: Vec<f64>,
        second_deriv_at_zero: ExtendedReal,
    },
}

/// A validated correlation function `R` with `R(0) = 1` and `|R| <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceFamily", into = "CovarianceFamily")]
pub struct CovarianceModel {
    family: CovarianceFamily,
}

impl TryFrom<CovarianceFamily> for CovarianceModel {
    type Error = Error;

    fn try_from(family: CovarianceFamily) -> Result<Self> {
        Self::new(family)
    }
}

impl From<CovarianceModel> for CovarianceFamily {
    fn from(m: CovarianceModel) -> Self {
        m.family
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidCovariance(format!("length scale must be positive and finite, got {scale}")))
    }
}

impl CovarianceModel {
    pub fn new(family: CovarianceFamily) -> Result<Self> {
        match &family {
            CovarianceFamily::Gaussian { scale }
            | CovarianceFamily::Exponential { scale }
            | CovarianceFamily::Cosine { scale }
            | CovarianceFamily::Matern { scale, .. } => check_scale(*scale)?,
            CovarianceFamily::Constant => {}
            CovarianceFamily::Tabulated { r, values, second_deriv_at_zero } => {
                validate_table(r, values, *second_deriv_at_zero)?
            }
        }
        Ok(Self { family })
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(CovarianceFamily::Gaussian { scale })
    }

    pub fn exponential(scale: f64) -> Result<Self> {
        Self::new(CovarianceFamily::Exponential { scale })
    }

    pub fn cosine(scale: f64) -> Result<Self> {
        Self::new(CovarianceFamily::Cosine { scale })
    }

    pub fn matern(smoothness: MaternSmoothness, scale: f64) -> Result<Self> {
        Self::new(CovarianceFamily::Matern { smoothness, scale })
    }

    pub fn constant() -> Self {
        Self { family: CovarianceFamily::Constant }
    }

    pub fn tabulated(r: Vec<f64>, values: Vec<f64>, second_deriv_at_zero: ExtendedReal) -> Result<Self> {
        Self::new(CovarianceFamily::Tabulated { r, values, second_deriv_at_zero })
    }

    pub fn family(&self) -> &CovarianceFamily {
        &self.family
    }

    pub fn is_constant(&self) -> bool {
        match &self.family {
            CovarianceFamily::Constant => true,
            CovarianceFamily::Tabulated { values, .. } => values.iter().all(|&v| v == 1.0),
            _ => false,
        }
    }

    /// `R(r)`; the argument is a distance, so only `|r|` matters.
    pub fn correlation(&self, r: f64) -> f64 {
        let r = r.abs();
        match &self.family {
            CovarianceFamily::Gaussian { scale } => {
                let x = r / scale;
                (-x * x).exp()
            }
            CovarianceFamily::Exponential { scale } => (-r / scale).exp(),
            CovarianceFamily::Cosine { scale } => (r / scale).cos(),
            CovarianceFamily::Matern { smoothness, scale } => {
                let x = r / scale;
                match smoothness {
                    MaternSmoothness::Half => (-x).exp(),
                    MaternSmoothness::ThreeHalves => {
                        let y = 3f64.sqrt() * x;
                        (1.0 + y) * (-y).exp()
                    }
                    MaternSmoothness::FiveHalves => {
                        let y = 5f64.sqrt() * x;
                        (1.0 + y + y * y / 3.0) * (-y).exp()
                    }
                }
            }
            CovarianceFamily::Constant => 1.0,
            CovarianceFamily::Tabulated { r: nodes, values, .. } => interpolate(nodes, values, r),
        }
    }

    /// `R''(0+)`: finite and negative for mean-square differentiable fields,
    /// `-inf` otherwise, and `0` only for the constant model.
    pub fn second_deriv_at_zero(&self) -> ExtendedReal {
        match &self.family {
            CovarianceFamily::Gaussian { scale } => ExtendedReal::Finite(-2.0 / (scale * scale)),
            CovarianceFamily::Exponential { .. } => ExtendedReal::NegInfinity,
            CovarianceFamily::Cosine { scale } => ExtendedReal::Finite(-1.0 / (scale * scale)),
            CovarianceFamily::Matern { smoothness, scale } => match smoothness {
                MaternSmoothness::Half => ExtendedReal::NegInfinity,
                MaternSmoothness::ThreeHalves => ExtendedReal::Finite(-3.0 / (scale * scale)),
                MaternSmoothness::FiveHalves => ExtendedReal::Finite(-5.0 / (3.0 * scale * scale)),
            },
            CovarianceFamily::Constant => ExtendedReal::Finite(0.0),
            CovarianceFamily::Tabulated { second_deriv_at_zero, .. } => *second_deriv_at_zero,
        }
    }
}

fn validate_table(r: &[f64], values: &[f64], second: ExtendedReal) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidCovariance(msg));
    if r.len() != values.len() || r.is_empty() {
        return bad(format!("table needs matching nonempty columns, got {} and {}", r.len(), values.len()));
    }
    if r[0] != 0.0 || values[0] != 1.0 {
        return bad(format!("table must start at (0, 1), got ({}, {})", r[0], values[0]));
    }
    if r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().any(|x| !x.is_finite()) {
        return bad("table distances must be finite and strictly ascending".into());
    }
    if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
        return bad(format!("table value {v} outside [-1, 1]"));
    }
    let constant = values.iter().all(|&v| v == 1.0);
    match second {
        ExtendedReal::NegInfinity => {}
        ExtendedReal::Finite(x) if x.is_nan() || x > 0.0 => {
            return bad(format!("R''(0+) must be <= 0, got {x}"));
        }
        ExtendedReal::Finite(x) if x == 0.0 && !constant => {
            return bad("R''(0+) = 0 is reserved for the constant model".into());
        }
        ExtendedReal::Finite(x) if x != 0.0 && constant => {
            return bad(format!("constant table must have R''(0+) = 0, got {x}"));
        }
        ExtendedReal::Finite(_) => {}
    }
    Ok(())
}

fn interpolate(nodes: &[f64], values: &[f64], r: f64) -> f64 {
    let last = nodes.len() - 1;
    if r >= nodes[last] {
        return values[last];
    }
    let i = nodes.partition_point(|&x| x <= r) - 1;
    let w = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
    values[i] + w * (values[i + 1] - values[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_parametric() -> Vec<CovarianceModel> {
        vec![
            CovarianceModel::gaussian(0.7).unwrap(),
            CovarianceModel::exponential(1.3).unwrap(),
            CovarianceModel::cosine(0.5).unwrap(),
            CovarianceModel::matern(MaternSmoothness::Half, 1.0).unwrap(),
            CovarianceModel::matern(MaternSmoothness::ThreeHalves, 0.8).unwrap(),
            CovarianceModel::matern(MaternSmoothness::FiveHalves, 2.0).unwrap(),
            CovarianceModel::constant(),
        ]
    }

    #[test]
    fn unit_at_origin_and_bounded() {
        for m in all_parametric() {
            assert_eq!(m.correlation(0.0), 1.0, "{m:?}");
            for i in 0..200 {
                let r = f64::from(i) * 0.05;
                assert!(m.correlation(r).abs() <= 1.0);
                assert_eq!(m.correlation(r), m.correlation(-r));
            }
        }
    }

    #[test]
    fn curvature_matches_second_differences() {
        for m in all_parametric() {
            let h = 1e-5;
            let fd = 2.0 * (m.correlation(h) - 1.0) / (h * h);
            match m.second_deriv_at_zero() {
                ExtendedReal::Finite(x) => {
                    assert!((fd - x).abs() < 1e-4 * (1.0 + x.abs()), "{m:?}: {fd} vs {x}")
                }
                ExtendedReal::NegInfinity => assert!(fd < -1e3, "{m:?}: {fd}"),
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CovarianceModel::gaussian(0.0).is_err());
        assert!(CovarianceModel::exponential(f64::NAN).is_err());
        let fin = ExtendedReal::Finite(-1.0);
        assert!(CovarianceModel::tabulated(vec![0.0, 1.0], vec![0.9, 0.5], fin).is_err());
        assert!(CovarianceModel::tabulated(vec![0.0, 1.0], vec![1.0, 1.5], fin).is_err());
        assert!(CovarianceModel::tabulated(vec![0.0, 0.0], vec![1.0, 0.5], fin).is_err());
        assert!(CovarianceModel::tabulated(vec![0.0, 1.0], vec![1.0, 0.5], ExtendedReal::Finite(1.0)).is_err());
        assert!(CovarianceModel::tabulated(vec![0.0, 1.0], vec![1.0, 0.5], ExtendedReal::Finite(0.0)).is_err());
        assert!(CovarianceModel::tabulated(vec![0.0, 1.0], vec![1.0, 1.0], fin).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_holds() {
        let m = CovarianceModel::tabulated(
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.5, -0.25],
            ExtendedReal::NegInfinity,
        )
        .unwrap();
        assert_eq!(m.correlation(0.5), 0.75);
        assert_eq!(m.correlation(1.5), 0.125);
        assert_eq!(m.correlation(9.0), -0.25);
        assert!(!m.is_constant());
        assert!(CovarianceModel::constant().is_constant());
    }

    #[test]
    fn serde_round_trip_validates() {
        let m = CovarianceModel::matern(MaternSmoothness::ThreeHalves, 2.0).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"family":"matern","smoothness":"three-halves","scale":2.0}"#);
        let back: CovarianceModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CovarianceModel>(r#"{"family":"gaussian","scale":-1}"#).is_err());
    }
}
