use proptest::prelude::*;
use twolevel_core::estimators::*;
use twolevel_core::risk::EstimatorSpec;
use twolevel_core::Spectrum;

fn panel_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (2usize..6, 4usize..60).prop_flat_map(|(m, n)| {
        let width = population_bound(n, m).max(subject_bound(n));
        (Just(n), prop::collection::vec(prop::collection::vec(-3.0f64..3.0, width), m))
    })
}

fn spec() -> PosteriorSpec {
    PosteriorSpec::new(Spectrum::with_decay(0.7).unwrap(), Spectrum::with_decay(0.4).unwrap())
}

proptest! {
    #[test]
    fn population_estimates_ignore_subject_order((n, rows) in panel_strategy(), shift in 0usize..5) {
        let panel = CoefficientPanel::from_rows(n, &rows).unwrap();
        let m = panel.m();
        let order: Vec<usize> = (0..m).map(|i| (i + shift) % m).rev().collect();
        let moved = panel.permuted(&order).unwrap();
        for est in [EstimatorSpec::AdaptiveG { tau: 1.0 }, EstimatorSpec::FixedG { beta: 0.5 }, EstimatorSpec::PosteriorG { spec: spec() }] {
            let (a, b) = (est.fit(&panel).unwrap(), est.fit(&moved).unwrap());
            prop_assert!(a.distance_sq(&b) < 1e-20);
        }
    }

    #[test]
    fn subject_estimates_follow_their_subject((n, rows) in panel_strategy(), pick in 0usize..5) {
        let panel = CoefficientPanel::from_rows(n, &rows).unwrap();
        let m = panel.m();
        let j = pick % m;
        let mut order: Vec<usize> = (0..m).filter(|&i| i != j).collect();
        order.insert(0, j);
        order[1..].reverse();
        let moved = panel.permuted(&order).unwrap();
        let sel = lepskii_thresholds_f(&panel, j, 2.0, 3.0).unwrap();
        prop_assert_eq!(sel, lepskii_thresholds_f(&moved, 0, 2.0, 3.0).unwrap());
        let a = posterior_mean_f(&panel, j, &spec()).unwrap();
        let b = posterior_mean_f(&moved, 0, &spec()).unwrap();
        prop_assert!(a.distance_sq(&b) < 1e-20);
        let a = double_threshold_estimate_f(&panel, j, sel.k1, sel.k2).unwrap();
        let b = double_threshold_estimate_f(&moved, 0, sel.k1, sel.k2).unwrap();
        prop_assert!(a.distance_sq(&b) < 1e-20);
    }

    /// Posterior means are linear in the data: finite differences recover
    /// a gain independent of the base point and of the step.
    #[test]
    fn posterior_means_are_linear((n, rows) in panel_strategy(), h in 0.01f64..2.0) {
        let base = CoefficientPanel::from_rows(n, &rows).unwrap();
        let zero = CoefficientPanel::from_rows(n, &vec![vec![0.0; base.width()]; base.m()]).unwrap();
        let mut bumped = rows.clone();
        bumped[0][0] += h;
        let bumped = CoefficientPanel::from_rows(n, &bumped).unwrap();
        let mut unit = vec![vec![0.0; base.width()]; base.m()];
        unit[0][0] = 1.0;
        let unit = CoefficientPanel::from_rows(n, &unit).unwrap();
        let s = spec();
        let gain = posterior_mean_f(&unit, 0, &s).unwrap().coeff(1) - posterior_mean_f(&zero, 0, &s).unwrap().coeff(1);
        let fd = (posterior_mean_f(&bumped, 0, &s).unwrap().coeff(1) - posterior_mean_f(&base, 0, &s).unwrap().coeff(1)) / h;
        prop_assert!((gain - fd).abs() < 1e-9 * gain.abs().max(1.0));
        prop_assert!(gain > 0.0 && gain < 1.0);
    }

    /// Single-threshold truncations of the pooled mean keep a prefix.
    #[test]
    fn threshold_estimates_are_prefixes((n, rows) in panel_strategy(), k in 1usize..8) {
        let panel = CoefficientPanel::from_rows(n, &rows).unwrap();
        let k = k.min(panel.width());
        let pooled = pooled_coefficients(&panel, None).unwrap();
        let est = threshold_estimate_g(&panel, k).unwrap();
        prop_assert_eq!(est.coeffs(), &pooled[..k]);
    }
}
