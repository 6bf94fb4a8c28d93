use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use marked_sets_cli::{render_checks, run, ExperimentConfig, ExperimentName};

/// Runs one experiment and writes its curves, reports and manifest.
#[derive(Parser, Debug)]
#[command(name = "marked-sets", version)]
struct Args {
    /// One of theory-t0, general-t, derivative-check, definiteness,
    /// monotonicity, periodic-example, segment-singleton, grf-empirical.
    #[arg(long)]
    experiment: Option<ExperimentName>,
    /// JSON configuration (see docs/config.md).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    tolerance_scale: Option<f64>,
    /// Worker threads for replicate generation.
    #[arg(long)]
    workers: Option<usize>,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, marked_sets_cli::CliError> {
    let mut cfg = match (&args.config, args.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(e)) => ExperimentConfig::new(e),
        (None, None) => {
            return Err(marked_sets_cli::CliError::Config("pass --experiment or --config".into()));
        }
    };
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.replicates.is_some() {
        cfg.replicates = args.replicates;
    }
    if let Some(s) = args.tolerance_scale {
        cfg.tolerance_scale = s;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok((manifest, _)) => {
            print!("{}", render_checks(&manifest.checks));
            println!(
                "{}: {} in {:.2} s (config {})",
                manifest.experiment,
                if manifest.passed { "all checks passed" } else { "CHECKS FAILED" },
                manifest.wall_time_seconds,
                &manifest.config_hash[..12]
            );
            if manifest.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
