//! Acceptance suite: runs every experiment with its default configuration and
//! prints one PASS/FAIL line per criterion. Tolerances live in the
//! experiments; this target only aggregates.

use std::collections::BTreeMap;
use std::process::ExitCode;

use marked_sets_cli::{run, Check, ExperimentConfig, ExperimentName};

const CRITERIA: u8 = 12;

fn main() -> ExitCode {
    let mut by_criterion: BTreeMap<u8, Vec<Check>> = BTreeMap::new();
    let mut errors = Vec::new();
    for name in ExperimentName::ALL {
        match run(&ExperimentConfig::new(name)) {
            Ok((manifest, _)) => {
                for c in manifest.checks {
                    if let Some(n) = c.criterion {
                        by_criterion.entry(n).or_default().push(c);
                    } else if !c.passed {
                        errors.push(format!("{name}: supporting check {} failed: {}", c.id, c.detail));
                    }
                }
            }
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    }

    let mut failed = 0;
    for n in 1..=CRITERIA {
        let checks = by_criterion.get(&n).map(Vec::as_slice).unwrap_or_default();
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        failed += usize::from(!passed);
        let summary = if checks.is_empty() {
            "no check produced".to_string()
        } else {
            checks
                .iter()
                .map(|c| format!("{} measured {:.6e} tol {:.3e} {}", c.id, c.measured, c.tolerance, c.detail))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        println!("{} criterion {n:>2}: {summary}", if passed { "PASS" } else { "FAIL" });
    }
    for e in &errors {
        println!("FAIL {e}");
    }
    println!("acceptance: {} of {CRITERIA} criteria passed", usize::from(CRITERIA) - failed);
    if failed == 0 && errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
