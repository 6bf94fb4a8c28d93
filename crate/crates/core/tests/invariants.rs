use marked_sets::definiteness::{gram_pd_test, Witness};
use marked_sets::estimate::{derive_characteristics, KappaInputs};
use marked_sets::gauss::{f_t, phi, psi, theory_t0, threshold_moments, v0, MEAN_MARK_T0};
use proptest::prelude::*;

fn gram_min_eigenvalue(points: &[Vec<f64>]) -> f64 {
    let f = |r: f64| (-r * r).exp() - 0.3 * (-4.0 * r).exp();
    match gram_pd_test(f, points, 1e-10).unwrap().witness {
        Witness::Gram { min_eigenvalue, .. } => min_eigenvalue,
        other => panic!("unexpected witness {other:?}"),
    }
}

fn truncated_normal_variance(t: f64) -> f64 {
    let lambda = phi(t) / psi(t);
    1.0 + t * lambda - lambda * lambda
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_spectrum_is_invariant_under_rigid_motions(
        coords in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..7),
        angle in 0.0f64..std::f64::consts::TAU,
        shift in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let (s, c) = angle.sin_cos();
        let points: Vec<Vec<f64>> = coords.iter().map(|&(x, y)| vec![x, y]).collect();
        let moved: Vec<Vec<f64>> = coords
            .iter()
            .map(|&(x, y)| vec![c * x - s * y + shift.0, s * x + c * y + shift.1])
            .collect();
        prop_assert!((gram_min_eigenvalue(&points) - gram_min_eigenvalue(&moved)).abs() < 1e-10);
    }

    #[test]
    fn mark_covariance_vanishes_for_independent_values(t in -3.0f64..3.0) {
        prop_assert!(f_t(t, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mark_covariance_at_full_correlation_is_truncated_variance(t in -3.0f64..3.0) {
        let got = f_t(t, 1.0).unwrap();
        prop_assert!((got - truncated_normal_variance(t)).abs() < 1e-10, "{got}");
    }

    #[test]
    fn plug_in_characteristics_match_closed_forms(rho in -0.95f64..0.999) {
        let m = threshold_moments(0.0, rho).unwrap();
        let v = v0(rho).unwrap() / m.p;
        let k = KappaInputs { e_pos: m.e / m.p, e_neg: m.e / m.p, c: m.c / m.p, v_pos: v, v_neg: v };
        let d = derive_characteristics(&k, MEAN_MARK_T0).unwrap();
        let z = theory_t0(rho).unwrap();
        for (a, b) in [(d.e, z.e), (d.cov, z.cov), (d.gamma, z.gamma), (d.kmm, z.kmm), (d.cor, z.cor)] {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn threshold_zero_correlation_is_bounded(rho in -1.0f64..=1.0) {
        let z = theory_t0(rho).unwrap();
        prop_assert!(z.cor.abs() <= 1.0 + 1e-12);
        prop_assert!(z.gamma >= -1e-12);
    }
}
