use iontrap::atom_optics::bloch::{diagonal_state, null_space, propagate, steady_state_unchecked};
use iontrap::atom_optics::levels::{D32, P12, S12};
use iontrap::atom_optics::liouvillian::CMatrix;
use iontrap::atom_optics::*;
use iontrap::constants::AtomicConstants;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scheme(b: f64) -> LevelScheme {
    LevelScheme::sr88(&AtomicConstants::default(), b)
}

fn fig3b_fields(delta_422: f64) -> Vec<LaserField> {
    vec![
        LaserField::cooling_422(delta_422, 0.6, Polarization::pi(), 0.5),
        LaserField::repump_1092(-14.0, 7.0, Polarization::linear_perpendicular(), 0.5),
    ]
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if i == j {
                m[(i, i)] = Complex64::new(z.re, 0.0);
            } else {
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
    }
    m
}

/// `exp(A)` by Taylor series on `A / 2^k` and repeated squaring.
fn expm_squaring(a: &CMatrix) -> CMatrix {
    let norm = a.norm();
    let k = (norm / 0.25).log2().ceil().max(0.0) as i32;
    let scaled = a * Complex64::new(0.5f64.powi(k), 0.0);
    let n = a.nrows();
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for j in 1..30 {
        term = &term * &scaled * Complex64::new(1.0 / j as f64, 0.0);
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

fn random_fields(rng: &mut ChaCha8Rng) -> (LevelScheme, Vec<LaserField>) {
    let s = scheme(rng.random_range(0.5..3.0));
    let fields = vec![
        LaserField::cooling_422(
            rng.random_range(-40.0..10.0),
            rng.random_range(0.2..3.0),
            Polarization::pi(),
            rng.random_range(0.0..1.0),
        ),
        LaserField::repump_1092(
            rng.random_range(-30.0..10.0),
            rng.random_range(0.5..10.0),
            Polarization::linear_perpendicular(),
            rng.random_range(0.0..1.0),
        ),
    ];
    (s, fields)
}

#[test]
fn generator_preserves_trace_and_hermiticity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (s, f) = random_fields(&mut rng);
    let l = build_liouvillian(&s, &f).unwrap();
    let scale = l.matrix.norm();
    for _ in 0..100 {
        let rho = random_hermitian(&mut rng, 8);
        let out = l.apply(&rho);
        assert!(out.trace().norm() <= 1e-12 * scale, "trace {}", out.trace());
        assert!((&out - out.adjoint()).norm() <= 1e-12 * scale);
    }
}

#[test]
fn no_light_keeps_ground_state_and_decays_the_rest() {
    let s = scheme(0.0);
    let l = build_liouvillian(&s, &[]).unwrap();
    let rho = diagonal_state(&[0.3, 0.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(l.apply(&rho).norm() < 1e-20);
    // excited populations only decay
    let p = diagonal_state(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let dp = l.apply(&p);
    assert!(dp[(2, 2)].re < 0.0);
    assert!(dp[(0, 0)].re > 0.0 && dp[(1, 1)].re > 0.0);
    assert!(matches!(steady_state(&l), Err(OpticsError::DegenerateSteadyState { .. })));
    for v in null_space(&l) {
        for i in 2..8 {
            assert!(v[(i, i)].norm() < 1e-8);
        }
    }
}

#[test]
fn shelving_takes_fourteen_scatterings() {
    // π light has no dark ground state, so every ion ends up in D3/2
    let s = scheme(1.0);
    let l = build_liouvillian(&s, &[LaserField::cooling_422(0.0, 1.0, Polarization::pi(), 0.0)]).unwrap();
    let gamma = AtomicConstants::default().p12_decay_rate();
    let dt = 2e-9;
    let step = (&l.matrix * Complex64::new(dt, 0.0)).exp();
    let mut rho = diagonal_state(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let mut scattered = 0.0;
    let mut last_p = 0.0;
    for _ in 0..5000 {
        let r = propagate(&l, &step, &rho);
        let p = r.level_population(&l, P12);
        scattered += gamma * 0.5 * (p + last_p) * dt;
        last_p = p;
        rho = r.coherences;
    }
    let r = propagate(&l, &CMatrix::identity(64, 64), &rho);
    let d = r.level_population(&l, D32);
    assert!(d > 0.99, "D3/2 population {d}");
    let per_event = scattered / d;
    assert!((per_event - 14.0).abs() < 0.05, "{per_event}");
}

#[test]
fn steady_state_matches_long_time_propagation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let (s, f) = random_fields(&mut rng);
        let l = build_liouvillian(&s, &f).unwrap();
        let ss = steady_state(&l).unwrap();
        let t = 2e-2;
        let prop = expm_squaring(&(&l.matrix * Complex64::new(t, 0.0)));
        let rho0 = diagonal_state(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let late = propagate(&l, &prop, &rho0);
        let diff = (&late.coherences - &ss.coherences).camax();
        assert!(diff < 1e-6, "{diff}");
    }
}

#[test]
fn evolve_matches_independent_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (s, f) = random_fields(&mut rng);
    let l = build_liouvillian(&s, &f).unwrap();
    let rho0 = diagonal_state(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let t = 1.3e-6;
    let a = evolve(&l, &rho0, t).unwrap();
    let b = propagate(&l, &expm_squaring(&(&l.matrix * Complex64::new(t, 0.0))), &rho0);
    assert!((&a.coherences - &b.coherences).camax() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_states_are_physical(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, f) = random_fields(&mut rng);
        let l = build_liouvillian(&s, &f).unwrap();
        let r = steady_state(&l).unwrap();
        prop_assert!((r.trace() - 1.0).abs() < 1e-9);
        prop_assert!(r.populations.iter().all(|p| *p >= -1e-10));
        prop_assert!(r.min_eigenvalue() >= -1e-9);
        prop_assert!(r.hermiticity_residual() <= 1e-12);
        prop_assert!(r.residual <= 1e-10);
        let p = r.level_population(&l, P12);
        prop_assert!((r.scattering_rate - p * AtomicConstants::default().p12_decay_rate()).abs() <= 1e-6 * r.scattering_rate.max(1.0));
    }

    #[test]
    fn dark_resonances_split_linearly(b in 0.1f64..10.0, d in -100.0f64..20.0) {
        let s = scheme(b);
        let one = dark_resonance_positions(&s, d, b);
        let two = dark_resonance_positions(&s, d, 2.0 * b);
        prop_assert_eq!(one.len(), two.len());
        for (x, y) in one.iter().zip(&two) {
            prop_assert!(((y - d) - 2.0 * (x - d)).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_field_has_a_single_resonance() {
    assert_eq!(dark_resonance_positions(&scheme(0.0), -14.0, 0.0), vec![-14.0]);
}

#[test]
fn fig3b_spectrum_has_red_side_dark_resonance() {
    let s = scheme(1.18);
    let grid: Vec<f64> = (0..=120).map(|i| -40.0 + 0.5 * i as f64).collect();
    let spec = fluorescence_spectrum(&s, &fig3b_fields(0.0), &grid, &DetectionModel::paper()).unwrap();
    let predicted = dark_resonance_positions_for(&s, &fig3b_fields(0.0)[0], &fig3b_fields(0.0)[1], 1.18);
    let peak = spec.argmax().unwrap();
    let minima = spec.local_minima();
    assert!(minima.iter().any(|&i| {
        spec.x[i] < spec.x[peak] && predicted.iter().any(|p| (spec.x[i] - p).abs() < 1.0)
    }));
}

#[test]
fn dark_intensity_gives_background_only() {
    let s = scheme(1.18);
    let mut f = fig3b_fields(0.0);
    f[0].saturation = 0.0;
    let spec = fluorescence_spectrum(&s, &f, &[-20.0, 0.0, 20.0], &DetectionModel::paper()).unwrap();
    assert!(spec.y.iter().all(|y| (*y - 1.0).abs() < 1e-12));
}

#[test]
fn weak_field_gives_one_resonance_at_repump_detuning() {
    let s = scheme(0.1);
    let fields = vec![
        LaserField::cooling_422(0.0, 0.6, Polarization::pi(), 0.1),
        LaserField::repump_1092(-14.0, 0.5, Polarization::linear_perpendicular(), 0.1),
    ];
    let grid: Vec<f64> = (0..=400).map(|i| -24.0 + 0.05 * i as f64).collect();
    let spec = fluorescence_spectrum(&s, &fields, &grid, &DetectionModel::paper()).unwrap();
    let minima = spec.local_minima();
    assert_eq!(minima.len(), 1, "{:?}", minima.iter().map(|&i| spec.x[i]).collect::<Vec<_>>());
    assert!((spec.x[minima[0]] + 14.0).abs() <= 0.3);
}

#[test]
fn resolved_resonances_sit_on_spectrum_minima() {
    let b = 10.0;
    let s = scheme(b);
    let fields = vec![
        LaserField::cooling_422(0.0, 0.3, Polarization::pi(), 0.1),
        LaserField::repump_1092(-80.0, 0.3, Polarization::linear_perpendicular(), 0.1),
    ];
    let step = 0.5;
    let grid: Vec<f64> = (0..=120).map(|i| -110.0 + step * i as f64).collect();
    let spec = fluorescence_spectrum(&s, &fields, &grid, &DetectionModel::paper()).unwrap();
    let minima: Vec<f64> = spec.local_minima().iter().map(|&i| spec.x[i]).collect();
    let predicted = dark_resonance_positions_for(&s, &fields[0], &fields[1], b);
    for p in predicted.iter().filter(|p| **p > grid[0] && **p < grid[grid.len() - 1]) {
        assert!(minima.iter().any(|m| (m - p).abs() <= step), "{p} not in {minima:?}");
    }
}

#[test]
fn mirrored_zeeman_structure_gives_same_spectrum() {
    let grid: Vec<f64> = (0..40).map(|i| -30.0 + 1.0 * i as f64).collect();
    let det = DetectionModel::paper();
    let fields = fig3b_fields(0.0);
    let a = fluorescence_spectrum(&scheme(0.0), &fields, &grid, &det).unwrap();
    let mut mirrored = fields.clone();
    for f in mirrored.iter_mut() {
        f.polarization = f.polarization.mirrored();
    }
    let b = fluorescence_spectrum(&scheme(0.0), &mirrored, &grid, &det).unwrap();
    for (x, y) in a.y.iter().zip(&b.y) {
        assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
    }
    // with a field, m -> -m also flips B
    let c = fluorescence_spectrum(&scheme(1.18), &fields, &grid, &det).unwrap();
    let d = fluorescence_spectrum(&scheme(-1.18), &mirrored, &grid, &det).unwrap();
    for (x, y) in c.y.iter().zip(&d.y) {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }
}

#[test]
fn fig3b_steady_state_via_unchecked_path_agrees() {
    let s = scheme(1.18);
    let l = build_liouvillian(&s, &fig3b_fields(-5.0)).unwrap();
    let a = steady_state(&l).unwrap();
    let b = steady_state_unchecked(&l).unwrap();
    assert!((a.scattering_rate - b.scattering_rate).abs() < 1e-9 * a.scattering_rate);
    assert!(a.level_population(&l, S12) > 0.3);
}

#[test]
fn pumping_reaches_upper_ground_state() {
    let s = scheme(1.18);
    let f = pumping_fidelity(&s, 1.0, 3e-6).unwrap();
    assert!(f > 0.99, "{f}");
    let f_minus = pumping_fidelity(&s, 0.0, 3e-6).unwrap();
    assert!(f_minus < 0.01, "{f_minus}");
    let f0 = pumping_fidelity(&s, 1.0, 0.0).unwrap();
    assert!((f0 - 0.5).abs() < 1e-12);
}

#[test]
fn pumping_is_monotone_in_purity() {
    let s = scheme(1.18);
    let mut last = -1.0;
    for p in [0.0, 0.2, 0.5, 0.8, 0.9, 0.95, 0.99, 1.0] {
        let f = pumping_fidelity(&s, p, 3e-6).unwrap();
        assert!(f >= last - 1e-12, "purity {p}: {f} < {last}");
        last = f;
    }
}

fn poisson_pmf(mu: f64, k: u64) -> f64 {
    let mut p = (-mu).exp();
    for j in 1..=k {
        p *= mu / j as f64;
    }
    p
}

fn poisson_below(mu: f64, k: u64) -> f64 {
    (0..k).map(|j| poisson_pmf(mu, j)).sum()
}

#[test]
fn poisson_overlap_matches_exact_sums() {
    let m = DetectionModel {
        shelved_lifetime: f64::INFINITY,
        ..DetectionModel::paper()
    };
    let f = detection_fidelity(&m).unwrap();
    let eb = poisson_below(70.0, f.threshold);
    let ed = 1.0 - poisson_below(1.0, f.threshold);
    assert!((f.error_bright - eb).abs() < 1e-12);
    assert!((f.error_dark - ed).abs() < 1e-12);
    assert!(f.mean_error() < 1e-6);
    // the chosen threshold is optimal among all thresholds
    for k in 0..80 {
        let e = 0.5 * (poisson_below(70.0, k) + 1.0 - poisson_below(1.0, k));
        assert!(e >= f.mean_error() - 1e-15);
    }
}

#[test]
fn shelf_decay_dominates_at_one_millisecond() {
    let f = detection_fidelity(&DetectionModel::paper()).unwrap();
    let closed = 1.0 - (-1e-3f64 / 0.39).exp();
    assert!((f.total_error() - closed).abs() < 1e-4);
    let (t, best) = optimal_detection_time(&DetectionModel::paper(), 1e-5, 2e-3, 200).unwrap();
    assert!(t < 1e-3);
    assert!(best.total_error() <= 1.1e-3, "{}", best.total_error());
    assert!(best.fidelity >= 0.9989);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detection_fidelity_monotone_in_rates(bright in 1e4f64..1e5, dark in 0.0f64..4e3, extra in 0.0f64..2e3) {
        let base = DetectionModel { bright_rate: bright, dark_rate: dark, ..DetectionModel::paper() };
        let f = detection_fidelity(&base).unwrap().fidelity;
        let darker = DetectionModel { dark_rate: dark + extra, ..base.clone() };
        let brighter = DetectionModel { bright_rate: bright + extra, ..base.clone() };
        prop_assert!(detection_fidelity(&darker).unwrap().fidelity <= f + 1e-15);
        prop_assert!(detection_fidelity(&brighter).unwrap().fidelity >= f - 1e-15);
    }
}
