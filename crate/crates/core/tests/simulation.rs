use marked_sets::estimate::{collect_statistics, collect_statistics_with, EstimatorConfig};
use marked_sets::gauss::{CovarianceModel, CurveKind};
use marked_sets::simulate::{
    excursion_sample, periodic_triangle_at, periodic_triangle_sample, sample_grf, GridSpec, Membership,
    ModelDescriptor, RngSeed,
};
use proptest::prelude::*;

fn cov_estimates(stats: &marked_sets::estimate::PairStatistics) -> Vec<f64> {
    stats
        .characteristics()
        .unwrap()
        .into_iter()
        .filter(|e| e.kind == CurveKind::Cov)
        .map(|e| e.estimate.unwrap())
        .collect()
}

#[test]
fn grf_lag_correlation_matches_the_model() {
    let grid = GridSpec::line(512, 0.1, true).unwrap();
    let cov = CovarianceModel::gaussian(1.0).unwrap();
    let replicates = 400;
    let seed = RngSeed::new(11);
    for lag in [0usize, 3, 6, 12] {
        let mut total = 0.0;
        for k in 0..replicates {
            let z = sample_grf(&grid, &cov, seed.replicate(k)).unwrap();
            let n = z.len();
            total += (0..n).map(|i| z[i] * z[(i + lag) % n]).sum::<f64>() / n as f64;
        }
        let est = total / replicates as f64;
        let want = cov.correlation(lag as f64 * 0.1);
        assert!((est - want).abs() <= 3.0 / (replicates as f64).sqrt(), "lag {lag}: {est} vs {want}");
    }
}

#[test]
fn grf_marginals_are_standard_normal() {
    let grid = GridSpec::line(256, 0.1, true).unwrap();
    let cov = CovarianceModel::gaussian(1.0).unwrap();
    let replicates = 500u64;
    let seed = RngSeed::new(23);
    let (mut sum, mut sq) = (0.0, 0.0);
    for k in 0..replicates {
        let z = sample_grf(&grid, &cov, seed.replicate(k)).unwrap();
        sum += z[17];
        sq += z[17] * z[17];
    }
    let n = replicates as f64;
    let bound = 4.0 / n.sqrt();
    assert!((sum / n).abs() <= bound, "mean {}", sum / n);
    assert!((sq / n - 1.0).abs() <= bound, "variance {}", sq / n);
}

#[test]
fn empirical_periodic_covariance_integrates_negative() {
    let nodes = 400;
    let h = 1.0 / nodes as f64;
    let grid = GridSpec::line(nodes, h, true).unwrap();
    let lags: Vec<f64> = (0..=nodes / 2).map(|k| k as f64 * h).collect();
    let cfg = EstimatorConfig::undilated(lags);
    let seed = RngSeed::new(5);
    let stats = collect_statistics_with(200, &cfg, |k| periodic_triangle_sample(0.8, &grid, seed.replicate(k as u64)))
        .unwrap();
    let c = cov_estimates(&stats);
    let half: f64 = c.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
    assert!(2.0 * half < 0.0, "integral {}", 2.0 * half);
}

#[test]
fn same_seed_gives_identical_samples() {
    let grid = GridSpec::line(256, 0.25, true).unwrap();
    let cov = CovarianceModel::exponential(2.0).unwrap();
    let a = sample_grf(&grid, &cov, RngSeed::new(3).replicate(9)).unwrap();
    let b = sample_grf(&grid, &cov, RngSeed::new(3).replicate(9)).unwrap();
    let c = sample_grf(&grid, &cov, RngSeed::new(3).replicate(10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn excursion_marks_are_field_values_above_threshold() {
    let grid = GridSpec::line(128, 0.25, true).unwrap();
    let cov = CovarianceModel::gaussian(1.0).unwrap();
    let field = sample_grf(&grid, &cov, RngSeed::new(1)).unwrap();
    let t = 0.3;
    let model = ModelDescriptor::Excursion { t, covariance: cov };
    let s = excursion_sample(&grid, &field, t, model, None).unwrap();
    for (i, z) in field.iter().enumerate() {
        let inside = *z >= t;
        assert_eq!(s.membership[i] == Membership::Solid, inside);
        assert_eq!(s.marks[i], inside.then_some(*z));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn periodic_estimates_are_translation_invariant(xi in 0.0f64..1.0, shift in 1usize..199, p in 0.7f64..1.0) {
        let nodes = 200;
        let h = 1.0 / nodes as f64;
        let grid = GridSpec::line(nodes, h, true).unwrap();
        let cfg = EstimatorConfig::undilated((0..8).map(|k| k as f64 * 5.0 * h).collect());
        let a = periodic_triangle_at(p, xi, &grid);
        let b = periodic_triangle_at(p, (xi + shift as f64 * h).fract(), &grid);
        let ea = cov_estimates(&collect_statistics(&[a], &cfg).unwrap());
        let eb = cov_estimates(&collect_statistics(&[b], &cfg).unwrap());
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }
}
