//! Experiment configuration. Every section has defaults that reproduce the
//! reference runs; unknown keys anywhere are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use marked_sets::gauss::CovarianceModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    TheoryT0,
    GeneralT,
    DerivativeCheck,
    Definiteness,
    Monotonicity,
    PeriodicExample,
    SegmentSingleton,
    GrfEmpirical,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::TheoryT0,
        ExperimentName::GeneralT,
        ExperimentName::DerivativeCheck,
        ExperimentName::Definiteness,
        ExperimentName::Monotonicity,
        ExperimentName::PeriodicExample,
        ExperimentName::SegmentSingleton,
        ExperimentName::GrfEmpirical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::TheoryT0 => "theory-t0",
            ExperimentName::GeneralT => "general-t",
            ExperimentName::DerivativeCheck => "derivative-check",
            ExperimentName::Definiteness => "definiteness",
            ExperimentName::Monotonicity => "monotonicity",
            ExperimentName::PeriodicExample => "periodic-example",
            ExperimentName::SegmentSingleton => "segment-singleton",
            ExperimentName::GrfEmpirical => "grf-empirical",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Overrides the replicate count of the Monte Carlo experiments.
    #[serde(default)]
    pub replicates: Option<usize>,
    /// Multiplies every tolerance of the run.
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Not part of the configuration hash.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub theory_t0: TheoryT0Params,
    #[serde(default)]
    pub general_t: GeneralTParams,
    #[serde(default)]
    pub derivative: DerivativeParams,
    #[serde(default)]
    pub definiteness: DefinitenessParams,
    #[serde(default)]
    pub monotonicity: MonotonicityParams,
    #[serde(default)]
    pub periodic: PeriodicParams,
    #[serde(default)]
    pub segment: SegmentParams,
    #[serde(default)]
    pub grf: GrfParams,
}

fn default_seed() -> u64 {
    20_240_601
}

fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName) -> Self {
        Self {
            experiment,
            seed: default_seed(),
            replicates: None,
            tolerance_scale: 1.0,
            workers: None,
            out: None,
            theory_t0: TheoryT0Params::default(),
            general_t: GeneralTParams::default(),
            derivative: DerivativeParams::default(),
            definiteness: DefinitenessParams::default(),
            monotonicity: MonotonicityParams::default(),
            periodic: PeriodicParams::default(),
            segment: SegmentParams::default(),
            grf: GrfParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tolerance_scale.is_finite() && self.tolerance_scale > 0.0) {
            return Err(CliError::Config(format!("tolerance_scale must be positive, got {}", self.tolerance_scale)));
        }
        if self.replicates == Some(0) {
            return Err(CliError::Config("replicates must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be positive".into()));
        }
        let m = &self.monotonicity;
        if m.order < 30 || m.precision < 64 || m.circle_samples < 720 {
            return Err(CliError::Config("monotonicity needs order >= 30, precision >= 64 and >= 720 circle samples".into()));
        }
        if self.grf.lag_steps.is_empty() || self.periodic.lags.is_empty() {
            return Err(CliError::Config("lag lists must be nonempty".into()));
        }
        if self.segment.eps.len() < 3 {
            return Err(CliError::Config("the segment eps ladder needs at least three radii".into()));
        }
        Ok(())
    }

    pub fn replicates_or(&self, default: usize) -> usize {
        self.replicates.unwrap_or(default)
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryT0Params {
    /// Number of points of the correlation grid on `[-1, 1]`.
    pub rho_points: usize,
    /// Correlations for the Monte Carlo comparison.
    pub mc_rhos: Vec<f64>,
    /// Accepted pairs per correlation.
    pub mc_pairs: usize,
    pub mc_batches: usize,
}

impl Default for TheoryT0Params {
    fn default() -> Self {
        Self { rho_points: 201, mc_rhos: vec![0.2, 0.5, 0.8], mc_pairs: 1_000_000, mc_batches: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneralTParams {
    pub identity_t: Vec<f64>,
    pub plot_t: Vec<f64>,
    pub plot_points: usize,
}

impl Default for GeneralTParams {
    fn default() -> Self {
        Self { identity_t: vec![-2.0, -1.0, 0.0, 0.5, 1.0, 2.0], plot_t: vec![-1.0, 0.0, 1.0], plot_points: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DerivativeParams {
    pub t_values: Vec<f64>,
    pub h_coarse: f64,
    pub h_fine: f64,
    pub scan_points: usize,
}

impl Default for DerivativeParams {
    fn default() -> Self {
        Self { t_values: vec![-1.0, 0.0, 1.0], h_coarse: 1e-3, h_fine: 1e-4, scan_points: 401 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefinitenessParams {
    pub r_max: f64,
    pub r_points: usize,
    pub fourier_terms: usize,
}

impl Default for DefinitenessParams {
    fn default() -> Self {
        Self { r_max: 3.0, r_points: 3001, fourier_terms: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotonicityParams {
    pub order: usize,
    pub precision: usize,
    pub circle_samples: usize,
}

impl Default for MonotonicityParams {
    fn default() -> Self {
        Self { order: 200, precision: 128, circle_samples: 720 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicParams {
    pub p_values: Vec<f64>,
    pub nodes: usize,
    pub replicates: usize,
    pub lags: Vec<f64>,
}

impl Default for PeriodicParams {
    fn default() -> Self {
        Self {
            p_values: vec![0.7, 0.8, 0.9],
            nodes: 2000,
            replicates: 10_000,
            lags: (0..10).map(|k| f64::from(k) * 0.05).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentParams {
    pub p: f64,
    pub spacing: f64,
    pub periods: usize,
    pub replicates: usize,
    pub lag: f64,
    /// Descending dilation radii.
    pub eps: Vec<f64>,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self { p: 0.3, spacing: 0.01, periods: 10, replicates: 200, lag: 1.0, eps: vec![0.08, 0.06, 0.04, 0.02] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrfParams {
    pub t: f64,
    pub covariance: CovarianceModel,
    pub nodes: usize,
    pub spacing: f64,
    pub replicates: usize,
    /// Lags in grid steps.
    pub lag_steps: Vec<usize>,
    /// Fraction of lags at which every characteristic must agree.
    pub coverage: f64,
}

impl Default for GrfParams {
    fn default() -> Self {
        Self {
            t: 0.0,
            covariance: CovarianceModel::gaussian(1.0).expect("valid scale"),
            nodes: 1024,
            spacing: 0.05,
            replicates: 2000,
            lag_steps: (1..=20).map(|k| 2 * k).collect(),
            coverage: 0.95,
        }
    }
}
