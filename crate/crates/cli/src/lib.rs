//! Experiment runner for the `marked-sets` library.
//!
//! Each experiment produces a list of [`Check`]s and a set of in-memory
//! artifacts (CSV curves and JSON reports). [`run`] writes the artifacts and
//! a [`RunManifest`] to the output directory.

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod plot;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, ExperimentName};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] marked_sets::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One pass/fail check with the measured quantity and what it was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// Acceptance criterion this check belongs to, if any.
    pub criterion: Option<u8>,
    pub description: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `|measured - expected| <= tolerance`.
    pub fn close(id: &str, criterion: Option<u8>, description: &str, measured: f64, expected: f64, tolerance: f64) -> Self {
        let passed = (measured - expected).abs() <= tolerance;
        Self::new(id, criterion, description, measured, expected, tolerance, passed)
    }

    /// Passes when `measured <= tolerance`; used for error maxima.
    pub fn at_most(id: &str, criterion: Option<u8>, description: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(id, criterion, description, measured, 0.0, tolerance, measured <= tolerance)
    }

    pub fn new(
        id: &str,
        criterion: Option<u8>,
        description: &str,
        measured: f64,
        expected: f64,
        tolerance: f64,
        passed: bool,
    ) -> Self {
        Self {
            id: id.to_string(),
            criterion,
            description: description.to_string(),
            measured,
            expected,
            tolerance,
            passed,
            detail: String::new(),
        }
    }

    pub fn failed(id: &str, criterion: Option<u8>, description: &str, detail: String) -> Self {
        let mut c = Self::new(id, criterion, description, f64::NAN, f64::NAN, f64::NAN, false);
        c.detail = detail;
        c
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn and(mut self, ok: bool, why: &str) -> Self {
        if !ok {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(why);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self { name: name.to_string(), bytes })
    }

    /// CSV from a header and rows of already formatted fields.
    pub fn csv(name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(Self { name: name.to_string(), bytes })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: ExperimentName,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

/// Runs the configured experiment; writes artifacts and `manifest.json`
/// when an output directory is configured.
pub fn run(cfg: &ExperimentConfig) -> Result<(RunManifest, Outcome), CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let outcome = experiments::run_experiment(cfg)?;
    let manifest = RunManifest {
        experiment: cfg.experiment,
        config_hash: config_hash(cfg),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        artifacts: outcome.artifacts.iter().map(|a| a.name.clone()).collect(),
        checks: outcome.checks.clone(),
        passed: outcome.passed(),
    };
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &manifest, &outcome)?;
    }
    Ok((manifest, outcome))
}

fn write_outputs(dir: &Path, manifest: &RunManifest, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    std::fs::write(dir.join("manifest.json"), Artifact::json("manifest.json", manifest)?.bytes)?;
    Ok(())
}

/// Formats a table of checks for the terminal.
pub fn render_checks(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        let criterion = c.criterion.map(|n| format!("[{n:>2}]")).unwrap_or_else(|| "    ".into());
        out.push_str(&format!(
            "{} {criterion} {:<28} measured {:>14.6e}  expected {:>12.4e}  tol {:>10.3e}  {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.measured,
            c.expected,
            c.tolerance,
            c.detail
        ));
    }
    out
}
