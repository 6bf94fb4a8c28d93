//! Tabulated second-order characteristics.

use serde::{Deserialize, Serialize};

use super::threshold::{e_t, f_t, orthant_p, theory_t0, threshold_moments, ThresholdModel};
use super::scalar::mills_ratio;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    /// Conditional mean mark `E(r)`.
    E,
    Cov,
    /// Mark variogram.
    Gamma,
    Cor,
    /// Mark correlation function normalised by the squared mean mark.
    Kmm,
    /// Probability that both points of the pair lie in the set.
    SetCovariance,
}

impl CurveKind {
    pub const ALL: [CurveKind; 6] = [
        CurveKind::E,
        CurveKind::Cov,
        CurveKind::Gamma,
        CurveKind::Cor,
        CurveKind::Kmm,
        CurveKind::SetCovariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::E => "E",
            CurveKind::Cov => "cov",
            CurveKind::Gamma => "gamma",
            CurveKind::Cor => "cor",
            CurveKind::Kmm => "kmm",
            CurveKind::SetCovariance => "set-covariance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    Empirical { replicates: usize },
}

/// A characteristic tabulated on an ascending grid of distances. `None`
/// marks a distance where the characteristic is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderCurve {
    pub kind: CurveKind,
    pub r_grid: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub provenance: Provenance,
}

impl SecondOrderCurve {
    pub fn new(
        kind: CurveKind,
        r_grid: Vec<f64>,
        values: Vec<Option<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        check_grid(&r_grid)?;
        if values.len() != r_grid.len() {
            return Err(Error::Grid(format!(
                "{} values for {} distances",
                values.len(),
                r_grid.len()
            )));
        }
        if let Some(bad) = values.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} curve value {bad}", kind.name())));
        }
        if let Provenance::Empirical { replicates: 0 } = provenance {
            return Err(Error::Precondition("empirical curve needs at least one replicate".into()));
        }
        Ok(Self { kind, r_grid, values, provenance })
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Option<f64>)> + '_ {
        self.r_grid.iter().copied().zip(self.values.iter().copied())
    }
}

fn check_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Grid("distances must be finite and nonnegative".into()));
    }
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid("distances must be strictly ascending".into()));
    }
    Ok(())
}

/// Theoretical curve of `kind` for `model` on `r_grid`.
///
/// At `t = 0` every kind has a closed form. For other thresholds `E`, `cov`,
/// `kmm` and the set covariance are evaluated by quadrature; `gamma` and
/// `cor` would need the second moment `E[Z(o)^2; both exceed t]`, which has
/// no closed form here, and are rejected.
pub fn theory_curve(model: &ThresholdModel, kind: CurveKind, r_grid: &[f64]) -> Result<SecondOrderCurve> {
    check_grid(r_grid)?;
    let t = model.t;
    let rhos = r_grid.iter().map(|&r| model.covariance.correlation(r));
    let (values, provenance) = if t == 0.0 {
        let values = rhos
            .map(|rho| -> Result<Option<f64>> {
                if kind == CurveKind::SetCovariance {
                    return orthant_p(0.0, rho).map(Some);
                }
                let z = theory_t0(rho)?;
                let v = match kind {
                    CurveKind::E => z.e,
                    CurveKind::Cov => z.cov,
                    CurveKind::Gamma => z.gamma,
                    CurveKind::Cor => z.cor,
                    CurveKind::Kmm => z.kmm,
                    CurveKind::SetCovariance => unreachable!(),
                };
                // At rho = -1 the pair never lies in the set together.
                Ok((rho > -1.0).then_some(v))
            })
            .collect::<Result<Vec<_>>>()?;
        (values, Provenance::ClosedForm)
    } else {
        let mean_mark = 1.0 / mills_ratio(t);
        let values = rhos
            .map(|rho| -> Result<Option<f64>> {
                match kind {
                    CurveKind::SetCovariance => orthant_p(t, rho).map(Some),
                    CurveKind::Cov => match f_t(t, rho) {
                        Ok(v) => Ok(Some(v)),
                        Err(Error::Degenerate(_)) => Ok(None),
                        Err(e) => Err(e),
                    },
                    CurveKind::E | CurveKind::Kmm => {
                        let m = threshold_moments(t, rho)?;
                        if !m.p.is_normal() {
                            return Ok(None);
                        }
                        Ok(Some(if kind == CurveKind::E {
                            e_t(t, rho)? / m.p
                        } else {
                            m.c / m.p / (mean_mark * mean_mark)
                        }))
                    }
                    CurveKind::Gamma | CurveKind::Cor => Err(Error::Domain(format!(
                        "{} has no closed form away from threshold zero",
                        kind.name()
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        (values, Provenance::Quadrature)
    };
    SecondOrderCurve::new(kind, r_grid.to_vec(), values, provenance)
}
