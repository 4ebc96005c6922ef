use proptest::prelude::*;
use surfsim::analysis::{
    break_even, fit_effective_alpha, fit_power_law, lifetime_ratio, p_from_times, predict_p_l, DataPoint, LifetimeParams,
    PowerLawFit, Weighting,
};

// Reference values below come from an independent 50-digit evaluation.

fn fixed_fit() -> PowerLawFit {
    PowerLawFit { a: 6.5e5, xi: 2.92, fit_range: (1e-3, 3e-3), residual: 0.0, points_used: 3, excluded: Vec::new() }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn prediction_regression_constant() {
    let v = predict_p_l(1e-3, 1.0, 0.872, &fixed_fit());
    assert!(close(v, 0.00704768398543558, 1e-12), "{v}");
    assert!(close(predict_p_l(2e-3, 0.0, 0.872, &fixed_fit()), 6.5e5 * 2e-3f64.powf(2.92), 1e-15));
}

#[test]
fn p_from_times_series() {
    let p = p_from_times(0.001, 1.0);
    assert!(close(p, 9.995001666250083e-4, 1e-13), "{p}");
    assert!((p - 9.995e-4).abs() < 1e-7);
}

#[test]
fn break_even_regression_constants() {
    let expected = [
        (0.0, 0.00761011937132238),
        (0.25, 0.00701690811731611),
        (0.5, 0.00562966959131776),
        (0.75, 0.00413653215435589),
        (1.0, 0.00292221972948562),
    ];
    for (c, want) in expected {
        let got = break_even(&LifetimeParams::default_d5(1e-3, c), 1e-4, 0.1).unwrap().unwrap();
        assert!(close(got, want, 1e-9), "c = {c}: {got} vs {want}");
        let at = lifetime_ratio(&LifetimeParams::default_d5(got, c)).unwrap().ratio;
        assert!((at - 1.0).abs() < 1e-9);
    }
}

#[test]
fn lifetime_ratio_regression_constants() {
    for (c, want) in [(1.0, 7.81538333159115), (0.0, 48.7622065728762)] {
        let got = lifetime_ratio(&LifetimeParams::default_d5(1e-3, c)).unwrap();
        assert!(!got.saturated);
        assert!(close(got.ratio, want, 1e-12), "c = {c}: {}", got.ratio);
    }
}

#[test]
fn d5_fit_constants_round_trip() {
    let points: Vec<DataPoint> = [1e-3, 1.5e-3, 2e-3, 2.5e-3, 3e-3]
        .iter()
        .map(|&p| DataPoint { p, c: 0.0, p_l: 6.5e5 * p.powf(2.92), stderr: 1e-3 })
        .collect();
    let fit = fit_power_law(&points, (1e-3, 3e-3), Weighting::Unweighted).unwrap();
    assert!(close(fit.a, 6.5e5, 1e-2) && close(fit.xi, 2.92, 1e-2), "{fit:?}");
}

#[test]
fn quadratic_scale_gives_alpha_to_1e6() {
    let ps = [1e-3, 2e-3, 3e-3];
    let fit = fixed_fit();
    let points: Vec<DataPoint> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .flat_map(|&c| {
            let b = 1.0 + 0.5 * c * c;
            ps.iter().map(move |&p| DataPoint { p, c, p_l: 6.5e5 * (b * p).powf(2.92), stderr: 0.0 })
        })
        .collect();
    let model = fit_effective_alpha(&points, &fit).unwrap();
    assert!((model.alpha - 0.5).abs() < 1e-6, "{}", model.alpha);
}

proptest! {
    #[test]
    fn power_law_fit_recovers_parameters(ln_a in 0.0f64..15.0, xi in 0.5f64..4.0, jitter in prop::collection::vec(-1e-3f64..1e-3, 6)) {
        let a = ln_a.exp();
        let points: Vec<DataPoint> = jitter
            .iter()
            .enumerate()
            .map(|(k, j)| {
                let p = 1e-3 * (1.0 + 0.4 * k as f64);
                DataPoint { p, c: 0.0, p_l: a * p.powf(xi) * (1.0 + j), stderr: 1e-3 }
            })
            .collect();
        for w in [Weighting::Unweighted, Weighting::Stderr] {
            let fit = fit_power_law(&points, (1e-3, 3e-3), w).unwrap();
            prop_assert_eq!(fit.points_used, 6);
            prop_assert!((fit.xi - xi).abs() < 0.01 * xi);
            prop_assert!(close(fit.a, a, 0.1));
        }
    }

    #[test]
    fn effective_alpha_is_exact_on_model_data(alpha in 0.0f64..3.0) {
        let fit = fixed_fit();
        let points: Vec<DataPoint> = [0.0, 0.5, 1.0]
            .iter()
            .flat_map(|&c| [1e-3, 3e-3].map(|p| DataPoint { p, c, p_l: predict_p_l(p, c, alpha, &fit), stderr: 0.0 }))
            .collect();
        let model = fit_effective_alpha(&points, &fit).unwrap();
        prop_assert!((model.alpha - alpha).abs() < 1e-9);
        prop_assert!(model.b_values.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn lifetime_decreases_with_coherence(x in 1e-4f64..5e-3, c in 0.0f64..1.0) {
        let lo = lifetime_ratio(&LifetimeParams::default_d5(x, c)).unwrap().ratio;
        let hi = lifetime_ratio(&LifetimeParams::default_d5(x, c + 0.1)).unwrap().ratio;
        prop_assert!(hi <= lo);
    }
}
