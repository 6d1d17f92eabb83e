//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use iontrap::constants::TWO_PI;
use iontrap::trap_model::{micromotion_scan_both, secular_frequencies, DuffingOscillator, FluorescenceProbe, MicromotionDrive, TrapConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Integrates `ẍ + γẋ + ω₀²x + (α/m)x³ = (F/m) cos ωt` with fixed-step RK4
/// from `(x0, v0)` and returns the amplitude of the fundamental Fourier
/// component once transients have died out.
pub fn ode_amplitude(osc: &DuffingOscillator, force: f64, omega: f64, x0: f64, v0: f64) -> f64 {
    let k_lin = osc.omega0 * osc.omega0;
    let k_cub = osc.alpha / osc.mass;
    let f = force / osc.mass;
    let g = osc.damping;
    let accel = |t: f64, x: f64, v: f64| -g * v - k_lin * x - k_cub * x * x * x + f * (omega * t).cos();

    let period = TWO_PI / omega;
    let steps_per_period = 200;
    let dt = period / steps_per_period as f64;
    let settle_periods = ((30.0 / g) / period).ceil() as usize;
    let measure_periods = 20;

    let (mut x, mut v, mut t) = (x0, v0, 0.0);
    let (mut c, mut s) = (0.0, 0.0);
    for step in 0..(settle_periods + measure_periods) * steps_per_period {
        if step >= settle_periods * steps_per_period {
            // trapezoid-free rectangle rule is exact for whole periods of a
            // trigonometric polynomial sampled uniformly
            c += x * (omega * t).cos();
            s += x * (omega * t).sin();
        }
        let k1x = v;
        let k1v = accel(t, x, v);
        let k2x = v + 0.5 * dt * k1v;
        let k2v = accel(t + 0.5 * dt, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
        let k3x = v + 0.5 * dt * k2v;
        let k3v = accel(t + 0.5 * dt, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
        let k4x = v + dt * k3v;
        let k4v = accel(t + dt, x + dt * k3x, v + dt * k3v);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += dt;
    }
    let n = (measure_periods * steps_per_period) as f64;
    2.0 * (c * c + s * s).sqrt() / n
}

/// Initial state on the single-harmonic solution `A cos(ωt − φ)`.
pub fn harmonic_state(osc: &DuffingOscillator, omega: f64, amplitude: f64) -> (f64, f64) {
    let stiffness = osc.omega0 * osc.omega0 - omega * omega + 0.75 * osc.alpha / osc.mass * amplitude * amplitude;
    let phi = (osc.damping * omega).atan2(stiffness);
    (amplitude * phi.cos(), amplitude * omega * phi.sin())
}

/// Drive force at which the response first becomes bistable:
/// `(F_c/m)² = 8 γ³ ω₀³ / (3√3 |κ|)` with `κ = 3α/(4m)` (near-resonance
/// approximation).
pub fn critical_force(osc: &DuffingOscillator) -> f64 {
    let kappa = 0.75 * osc.alpha.abs() / osc.mass;
    let fc_over_m = (8.0 * osc.damping.powi(3) * osc.omega0.powi(3) / (3.0 * 3f64.sqrt() * kappa)).sqrt();
    fc_over_m * osc.mass
}

pub struct DuffingCase {
    pub osc: DuffingOscillator,
    pub force: f64,
    pub omega: f64,
}

/// Randomised drive cases around the resonance; the first uses the
/// operating-point trap with a strong drive.
pub fn duffing_cases(base: DuffingOscillator, count: usize, seed: u64) -> Vec<DuffingCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let strong = out.is_empty();
        let osc = if out.len() < count / 2 {
            DuffingOscillator {
                damping: TWO_PI * rng.random_range(5e3..20e3),
                ..base
            }
        } else {
            DuffingOscillator {
                omega0: base.omega0 * rng.random_range(0.7..1.5),
                alpha: base.alpha * rng.random_range(0.3..3.0) * if rng.random_bool(0.2) { -1.0 } else { 1.0 },
                damping: TWO_PI * rng.random_range(5e3..20e3),
                ..base
            }
        };
        let scale = if strong { 3.0 } else { rng.random_range(0.2..3.0) };
        let force = scale * critical_force(&osc);
        let kappa = 0.75 * osc.alpha / osc.mass;
        let a_peak = force / (osc.mass * osc.damping * osc.omega0);
        let shift = kappa * a_peak * a_peak / (2.0 * osc.omega0);
        let (lo, hi) = if shift >= 0.0 {
            (-3.0 * osc.damping, shift + 3.0 * osc.damping)
        } else {
            (shift - 3.0 * osc.damping, 3.0 * osc.damping)
        };
        let omega = osc.omega0 + rng.random_range(lo..hi);
        let roots = osc.amplitudes(force, omega);
        if strong && roots.len() < 3 {
            continue;
        }
        // keep clear of the fold points, where the branches merge
        if roots.len() == 3 && (roots[2] - roots[1] < 0.1 * roots[2] || roots[1] - roots[0] < 0.1 * roots[1]) {
            continue;
        }
        out.push(DuffingCase { osc, force, omega });
    }
    out
}

/// Summary of a simulated up/down micromotion map on the default window.
#[derive(Debug)]
pub struct MicromotionShape {
    pub rest: f64,
    /// Largest drop below the rest rate anywhere on the `V = v_opt` row.
    pub max_v_opt_deviation: f64,
    /// Every row with `|V - v_opt| >= 0.2 V` falls below half the rest rate somewhere.
    pub all_far_rows_dark: bool,
    pub max_branch_difference: f64,
    /// All points where the sweeps disagree lie above the linear resonance of their row.
    pub differences_above_resonance: bool,
    /// Widest dark interval on either side of the linear resonance, Hz.
    pub dark_extent_above: f64,
    pub dark_extent_below: f64,
}

pub fn micromotion_shape() -> MicromotionShape {
    let cfg = TrapConfig::paper_calibrated();
    let drive = MicromotionDrive::default();
    let probe = FluorescenceProbe::default();
    let v: Vec<f64> = (0..41).map(|k| -0.5 + 0.02 * k as f64).collect();
    let f: Vec<f64> = (0..201).map(|k| 21.96e6 + 500.0 * k as f64).collect();
    let [up, down] = micromotion_scan_both(&cfg, &drive, &v, &f, &probe).unwrap();
    let rest = probe.counts_per_ms(0.0, 0.0);
    let wax = secular_frequencies(&cfg).unwrap().omega_ax;

    let mut shape = MicromotionShape {
        rest,
        max_v_opt_deviation: 0.0,
        all_far_rows_dark: true,
        max_branch_difference: 0.0,
        differences_above_resonance: true,
        dark_extent_above: 0.0,
        dark_extent_below: 0.0,
    };
    for (i, &vi) in v.iter().enumerate() {
        let offset = vi - drive.v_opt;
        let f0 = (cfg.rf_frequency + wax + drive.frequency_slope * offset) / TWO_PI;
        if offset.abs() < 1e-9 {
            for m in [&up, &down] {
                let dev = m.counts[i].iter().map(|c| (rest - c).abs()).fold(0.0, f64::max);
                shape.max_v_opt_deviation = shape.max_v_opt_deviation.max(dev);
            }
            continue;
        }
        if offset.abs() >= 0.2 - 1e-9 && up.row_min(i).max(down.row_min(i)) >= 0.5 * rest {
            shape.all_far_rows_dark = false;
        }
        for (j, &fj) in f.iter().enumerate() {
            let d = (up.counts[i][j] - down.counts[i][j]).abs();
            shape.max_branch_difference = shape.max_branch_difference.max(d);
            if d > 1e-3 && fj < f0 {
                shape.differences_above_resonance = false;
            }
            if up.counts[i][j] < 0.5 * rest {
                if fj >= f0 {
                    shape.dark_extent_above = shape.dark_extent_above.max(fj - f0);
                } else {
                    shape.dark_extent_below = shape.dark_extent_below.max(f0 - fj);
                }
            }
        }
    }
    shape
}
