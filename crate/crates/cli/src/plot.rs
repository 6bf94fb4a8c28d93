//! Plot data for the mark covariance `f_t(rho)` and its derivative.

use marked_sets::gauss::f_t;

use crate::{Artifact, CliError};

/// Step of the central differences for `f_t'`.
pub const DIFF_STEP: f64 = 1e-6;

/// `(rho, f_t(rho), f_t'(rho))` on `points` equally spaced correlations in
/// `(-1, 1]`. The derivative at `rho = 1` is infinite.
pub fn covariance_panel(t: f64, points: usize) -> Result<Vec<(f64, f64, f64)>, CliError> {
    if points < 2 {
        return Err(CliError::Config("a panel needs at least two points".into()));
    }
    let step = 2.0 / (points - 1) as f64;
    (1..points)
        .map(|k| {
            let rho = if k == points - 1 { 1.0 } else { -1.0 + step * k as f64 };
            let value = f_t(t, rho)?;
            let slope = if rho == 1.0 {
                f64::INFINITY
            } else {
                let h = DIFF_STEP.min(0.5 * (1.0 - rho));
                (f_t(t, rho + h)? - f_t(t, rho - h)?) / (2.0 * h)
            };
            Ok((rho, value, slope))
        })
        .collect()
}

fn panel_name(t: f64) -> String {
    format!("f_t_{}.csv", format!("{t}").replace('-', "m").replace('.', "p"))
}

/// One CSV per threshold with columns `rho,f_t,f_t_prime`.
pub fn emit_plot_data(t_values: &[f64], points: usize) -> Result<Vec<Artifact>, CliError> {
    if t_values.is_empty() {
        return Err(CliError::Config("no thresholds to plot".into()));
    }
    t_values
        .iter()
        .map(|&t| {
            let rows: Vec<Vec<String>> = covariance_panel(t, points)?
                .into_iter()
                .map(|(r, f, d)| vec![r.to_string(), f.to_string(), d.to_string()])
                .collect();
            Artifact::csv(&panel_name(t), &["rho", "f_t", "f_t_prime"], &rows)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_zero_panel_values() {
        let panel = covariance_panel(0.0, 201).unwrap();
        let at = |rho: f64| panel.iter().find(|p| (p.0 - rho).abs() < 1e-12).unwrap();
        assert!(at(0.0).1.abs() < 1e-12);
        assert!((at(1.0).1 - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
        assert_eq!(at(1.0).2, f64::INFINITY);
    }

    #[test]
    fn panel_names_are_file_safe() {
        assert_eq!(panel_name(-1.0), "f_t_m1.csv");
        assert_eq!(panel_name(0.5), "f_t_0p5.csv");
    }
}
