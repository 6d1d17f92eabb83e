use std::sync::Arc;

use iontrap::fitting::models::{lookup, ModelContext};
use iontrap::fitting::*;
use iontrap::signal::{linspace, logspace, SignalCurve};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn exp_model() -> Arc<dyn Model> {
    FnModel::new("exp", &["amp", "rate"], |p, x| Ok(x.iter().map(|t| p[0] * (-p[1] * t).exp()).collect())).shared()
}

fn noisy(curve: &SignalCurve, sigma: f64, seed: u64) -> SignalCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    SignalCurve {
        x: curve.x.clone(),
        y: curve.y.iter().map(|y| y + n.sample(&mut rng)).collect(),
        y_err: None,
    }
}

fn problem_from(name: &str, ctx: ModelContext, data: SignalCurve, init: Option<Vec<f64>>) -> FitProblem {
    let f = lookup(name).unwrap();
    let model = f.build(&ctx).unwrap();
    let specs = f.params();
    let init = init.unwrap_or_else(|| specs.iter().map(|p| p.init).collect());
    FitProblem::new(model, init, specs.iter().map(|p| p.bound()).collect(), data).unwrap()
}

fn heating_truth(red_points: usize) -> (Arc<dyn Model>, Vec<f64>) {
    let f = lookup("heating").unwrap();
    let model = f.build(&ModelContext::default().with("red_points", red_points as f64)).unwrap();
    (model, vec![0.016, 0.05, 100.0, 0.02])
}

fn heating_data(sigma: f64, seed: u64) -> (FitProblem, f64) {
    let delays = linspace(0.0, 60.0, 13);
    let x = [delays.clone(), delays].concat();
    let (model, truth) = heating_truth(13);
    let y = model.eval(&truth, &x).unwrap();
    let clean = SignalCurve::new(x, y).unwrap();
    let data = if sigma > 0.0 { noisy(&clean, sigma, seed) } else { clean };
    let p = problem_from("heating", ModelContext::default().with("red_points", 13.0), data, None);
    (p, truth[0])
}

#[test]
fn constant_model_exact() {
    let data = SignalCurve::from_fn(&linspace(0.0, 1.0, 11), |_| 0.37);
    let p = problem_from("constant", ModelContext::default(), data, None);
    let r = fit(&p, &FitOptions::default()).unwrap();
    assert!((r.params[0] - 0.37).abs() < 1e-12);
    assert!(r.residual_norm < 1e-12);
}

#[test]
fn proportional_model_exact() {
    let m = FnModel::new("prop", &["a"], |p, x| Ok(x.iter().map(|v| p[0] * v).collect())).shared();
    let data = SignalCurve::from_fn(&linspace(-3.0, 3.0, 13), |x| 2.0 * x);
    let p = FitProblem::new(m, vec![-7.0], vec![Bound::free()], data).unwrap();
    let r = fit(&p, &FitOptions::default()).unwrap();
    assert!((r.params[0] - 2.0).abs() < 1e-9);
}

#[test]
fn carrier_fit_recovers_occupation() {
    let t = linspace(0.0, 60.0, 241);
    let f = lookup("carrier-thermal").unwrap();
    let model = f.build(&ModelContext::default()).unwrap();
    let data = SignalCurve::new(t.clone(), model.eval(&[12.0, 180.0], &t).unwrap()).unwrap();
    let p = problem_from("carrier-thermal", ModelContext::default(), data, Some(vec![5.0, 170.0]));
    let r = fit(&p, &FitOptions::default()).unwrap();
    assert!((r.params[0] - 12.0).abs() < 1e-2, "{:?}", r.params);
    assert!((r.params[1] - 180.0).abs() < 1e-2);
}

#[test]
fn heating_fit_with_noise_recovers_rate() {
    for seed in 0..20 {
        let (p, rate) = heating_data(0.01, seed);
        let r = fit(&p, &FitOptions::default()).unwrap();
        assert!((r.params[0] / rate - 1.0).abs() < 0.1, "seed {seed}: {:?}", r.params);
    }
}

#[test]
fn noiseless_heating_fit_is_exact() {
    let (p, rate) = heating_data(0.0, 0);
    let r = fit(&p, &FitOptions::default()).unwrap();
    assert!((r.params[0] / rate - 1.0).abs() < 1e-3);
}

#[test]
fn single_point_grid_returns_point() {
    let (p, _) = heating_data(0.0, 0);
    let grid = vec![vec![0.02], vec![0.1], vec![90.0], vec![0.0]];
    assert_eq!(grid_init(&p, &grid).unwrap(), vec![0.02, 0.1, 90.0, 0.0]);
}

fn ramsey_problem(t2_us: f64) -> FitProblem {
    let t = linspace(0.0, 5000.0, 201);
    let f = lookup("ramsey").unwrap();
    let model = f.build(&ModelContext::default()).unwrap();
    let y = model.eval(&[t2_us, 2.0, 1.0, 0.0], &t).unwrap();
    problem_from("ramsey", ModelContext::default(), SignalCurve::new(t, y).unwrap(), Some(vec![500.0, 2.0, 1.0, 0.0]))
}

#[test]
fn ramsey_grid_lands_next_to_truth() {
    let p = ramsey_problem(2500.0);
    let axis = logspace(100.0, 10_000.0, 10);
    let best = grid_init(&p, &[axis.clone(), vec![], vec![], vec![]]).unwrap();
    let k = axis.iter().position(|v| *v == best[0]).unwrap();
    let truth_index = axis.partition_point(|v| *v < 2500.0) as f64 - 0.5;
    assert!((k as f64 - truth_index).abs() <= 1.0, "{best:?}");
    let r = fit(&FitProblem { params_init: best, ..p }, &FitOptions::default()).unwrap();
    assert!((r.params[0] - 2500.0).abs() < 1e-3);
}

#[test]
fn grid_argmin_beats_every_grid_point() {
    let p = ramsey_problem(2500.0);
    let grid = vec![vec![1000.0, 2500.0, 4000.0], vec![1.5, 2.0, 2.5], vec![0.8, 1.0], vec![0.0]];
    let best = grid_init(&p, &grid).unwrap();
    let rbest = p.residual_norm(&best).unwrap();
    for a in &grid[0] {
        for b in &grid[1] {
            for c in &grid[2] {
                assert!(rbest <= p.residual_norm(&[*a, *b, *c, 0.0]).unwrap());
            }
        }
    }
    assert_eq!(best, vec![2500.0, 2.0, 1.0, 0.0]);
}

#[test]
fn exact_fit_has_zero_width_intervals() {
    let (p, _) = heating_data(0.0, 0);
    let r = fit(&p, &FitOptions::default()).unwrap();
    for (lo, hi) in confidence_intervals(&r, 0.95).unwrap() {
        assert!(hi - lo < 1e-6 * hi.abs().max(1.0));
    }
}

#[test]
fn intervals_nest_by_level() {
    let (p, _) = heating_data(0.01, 3);
    let r = fit(&p, &FitOptions::default()).unwrap();
    let narrow = confidence_intervals(&r, 0.6827).unwrap();
    let wide = confidence_intervals(&r, 0.95).unwrap();
    for (n, w) in narrow.iter().zip(&wide) {
        assert!(w.0 <= n.0 && n.1 <= w.1);
    }
    assert!(confidence_intervals(&r, 1.0).is_err());
}

#[test]
fn heating_interval_coverage() {
    let mut covered = 0;
    for seed in 100..200 {
        let (p, rate) = heating_data(0.01, seed);
        let r = fit(&p, &FitOptions::default()).unwrap();
        let ci = confidence_intervals(&r, 0.95).unwrap();
        if ci[0].0 <= rate && rate <= ci[0].1 {
            covered += 1;
        }
    }
    assert!((88..=100).contains(&covered), "{covered}");
}

#[test]
fn unconverged_result_has_no_intervals() {
    let (p, _) = heating_data(0.01, 1);
    let opts = FitOptions {
        max_iter: 1,
        ..FitOptions::default()
    };
    let err = fit(&p, &opts).unwrap_err();
    let best = err.best_so_far().expect("best-so-far result");
    assert!(!best.converged);
    assert!(best.residual_norm <= p.residual_norm(&p.params_init).unwrap());
    assert!(matches!(confidence_intervals(best, 0.95), Err(FitError::NotConverged)));
}

#[test]
fn redundant_parameters_use_simplex() {
    let m = FnModel::new("sum", &["a", "b"], |p, x| Ok(x.iter().map(|v| (p[0] + p[1]) * v).collect())).shared();
    let data = SignalCurve::from_fn(&linspace(0.0, 1.0, 11), |x| 2.0 * x);
    let p = FitProblem::new(m, vec![0.3, 0.2], vec![Bound::new(-5.0, 5.0), Bound::new(-5.0, 5.0)], data).unwrap();
    let r = fit(&p, &FitOptions::default()).unwrap();
    assert_eq!(r.method, "nelder-mead");
    assert!((r.params[0] + r.params[1] - 2.0).abs() < 1e-6);
}

#[test]
fn model_errors_propagate() {
    let m = FnModel::new("bad", &["a"], |_, _| Err(FitError::ModelEvaluation("boom".into()))).shared();
    let data = SignalCurve::from_fn(&[1.0, 2.0], |x| x);
    let p = FitProblem::new(m, vec![1.0], vec![Bound::free()], data).unwrap();
    assert!(matches!(fit(&p, &FitOptions::default()), Err(FitError::ModelEvaluation(_))));
}

#[test]
fn fixed_parameters_stay_put() {
    let data = SignalCurve::from_fn(&linspace(0.0, 3.0, 31), |t| 2.0 * (-1.5 * t).exp());
    let p = FitProblem::new(exp_model(), vec![2.0, 1.0], vec![Bound::new(2.0, 2.0), Bound::new(0.0, 10.0)], data).unwrap();
    let r = fit(&p, &FitOptions::default()).unwrap();
    assert_eq!(r.params[0], 2.0);
    assert!((r.params[1] - 1.5).abs() < 1e-8);
}

#[test]
fn report_lists_parameters() {
    let (p, _) = heating_data(0.01, 2);
    let r = fit(&p, &FitOptions::default()).unwrap();
    let text = render_report("heating", &r);
    for name in ["rate_per_ms", "nbar0", "rabi_khz", "offset", "converged: true"] {
        assert!(text.contains(name));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_never_worsens_and_is_idempotent(
        amp in 0.5f64..3.0,
        rate in 0.2f64..4.0,
        a0 in 0.1f64..5.0,
        r0 in 0.05f64..8.0,
        seed in 0u64..1000,
    ) {
        let clean = SignalCurve::from_fn(&linspace(0.0, 3.0, 40), |t| amp * (-rate * t).exp());
        let data = noisy(&clean, 0.02, seed);
        let bounds = vec![Bound::new(0.0, 10.0), Bound::new(0.0, 10.0)];
        let p = FitProblem::new(exp_model(), vec![a0, r0], bounds, data).unwrap();
        let r = fit(&p, &FitOptions::default()).unwrap();
        prop_assert!(r.residual_norm <= p.residual_norm(&[a0, r0]).unwrap());
        let again = fit(&FitProblem { params_init: r.params.clone(), ..p.clone() }, &FitOptions::default()).unwrap();
        for (a, b) in again.params.iter().zip(&r.params) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn jacobian_matches_analytic_derivative(amp in 0.5f64..3.0, rate in 0.2f64..4.0) {
        let x = linspace(0.0, 3.0, 25);
        let data = SignalCurve::from_fn(&x, |_| 0.0);
        let p = FitProblem::new(exp_model(), vec![amp, rate], vec![Bound::free(), Bound::free()], data).unwrap();
        let j = jacobian(&p, &[amp, rate]).unwrap();
        for (i, t) in x.iter().enumerate() {
            let e = (-rate * t).exp();
            let da = e;
            let dr = -amp * t * e;
            prop_assert!((j[(i, 0)] - da).abs() <= 1e-4 * da.abs().max(1e-8));
            prop_assert!((j[(i, 1)] - dr).abs() <= 1e-4 * dr.abs().max(1e-8));
        }
    }

    #[test]
    fn weight_scale_leaves_params_unchanged(scale in 1e-3f64..1e3, seed in 0u64..1000) {
        let clean = SignalCurve::from_fn(&linspace(0.0, 3.0, 40), |t| 1.7 * (-0.9 * t).exp());
        let data = noisy(&clean, 0.02, seed);
        let w: Vec<f64> = (0..40).map(|k| 1.0 + (k % 3) as f64).collect();
        let bounds = vec![Bound::new(0.0, 10.0), Bound::new(0.0, 10.0)];
        let p = FitProblem::new(exp_model(), vec![1.0, 1.0], bounds, data).unwrap();
        let a = fit(&p.clone().with_weights(w.clone()).unwrap(), &FitOptions::default()).unwrap();
        let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let b = fit(&p.with_weights(scaled).unwrap(), &FitOptions::default()).unwrap();
        for (x, y) in a.params.iter().zip(&b.params) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} {y}");
        }
    }
}
