//! Steady-state response of the driven anharmonic axial mode,
//! `ẍ + γẋ + ω₀²x + (α/m)x³ = (F/m) cos ωt`, in the single-harmonic
//! approximation.

use serde::{Deserialize, Serialize};

use super::{secular_frequencies, TrapConfig, TrapError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuffingResponse {
    pub drive_frequency_grid: Vec<f64>,
    pub amplitude_up: Vec<f64>,
    pub amplitude_down: Vec<f64>,
    pub bistable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuffingOscillator {
    /// Linear resonance (rad/s).
    pub omega0: f64,
    pub mass: f64,
    /// Cubic force coefficient (N/m³); positive values stiffen the mode.
    pub alpha: f64,
    /// Velocity damping rate γ (1/s).
    pub damping: f64,
}

impl DuffingOscillator {
    /// Positive steady-state amplitudes at drive frequency `omega` for force
    /// amplitude `force`, ascending. One entry outside the bistable region,
    /// three inside it (the middle one unstable).
    pub fn amplitudes(&self, force: f64, omega: f64) -> Vec<f64> {
        let f = force / self.mass;
        if f == 0.0 {
            return vec![0.0];
        }
        let detune = self.omega0.powi(2) - omega.powi(2);
        let gw_sq = (self.damping * omega).powi(2);
        let kappa = 0.75 * self.alpha / self.mass;
        if kappa == 0.0 {
            return vec![(f * f / (detune * detune + gw_sq)).sqrt()];
        }
        // w = κA²/ω₀² solves w³ + 2d w² + (d² + g²) w − κf²/ω₀⁶ = 0
        let w0_sq = self.omega0.powi(2);
        let d = detune / w0_sq;
        let g_sq = gw_sq / (w0_sq * w0_sq);
        let rhs = kappa * f * f / (w0_sq * w0_sq * w0_sq);
        let mut amps: Vec<f64> = real_cubic_roots(2.0 * d, d * d + g_sq, -rhs)
            .into_iter()
            .map(|w| w * w0_sq / kappa)
            .filter(|u| *u > 0.0)
            .map(f64::sqrt)
            .collect();
        amps.sort_by(f64::total_cmp);
        amps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        amps
    }

    /// Up- and down-sweep branches over an ascending grid.
    ///
    /// Where three solutions exist the up-sweep stays on the large branch and
    /// the down-sweep on the small one for a stiffening mode (`alpha ≥ 0`);
    /// a softening mode swaps the roles.
    pub fn response(&self, force: f64, grid: &[f64]) -> Result<DuffingResponse, TrapError> {
        check_grid(grid)?;
        let mut up = Vec::with_capacity(grid.len());
        let mut down = Vec::with_capacity(grid.len());
        let mut bistable = false;
        for &w in grid {
            let roots = self.amplitudes(force, w);
            let lo = roots[0];
            let hi = *roots.last().unwrap();
            if roots.len() >= 3 {
                bistable = true;
            }
            let (u, d) = if roots.len() >= 3 {
                if self.alpha >= 0.0 {
                    (hi, lo)
                } else {
                    (lo, hi)
                }
            } else {
                (lo, lo)
            };
            up.push(u);
            down.push(d);
        }
        Ok(DuffingResponse {
            drive_frequency_grid: grid.to_vec(),
            amplitude_up: up,
            amplitude_down: down,
            bistable,
        })
    }
}

fn check_grid(grid: &[f64]) -> Result<(), TrapError> {
    if grid.is_empty() {
        return Err(TrapError::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(TrapError::InvalidGrid("frequencies must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|p| p[1] < p[0]) {
        return Err(TrapError::InvalidGrid("grid must be sorted ascending".into()));
    }
    Ok(())
}

/// Axial response of the trap in `cfg` to a force `drive_force` (N) at each
/// angular frequency of `freq_grid`.
pub fn duffing_response(
    cfg: &TrapConfig,
    drive_force: f64,
    damping: f64,
    freq_grid: &[f64],
) -> Result<DuffingResponse, TrapError> {
    if !(damping > 0.0) {
        return Err(TrapError::InvalidConfig("damping must be > 0".into()));
    }
    let omega0 = secular_frequencies(cfg)?.omega_ax;
    DuffingOscillator {
        omega0,
        mass: cfg.ion_mass,
        alpha: cfg.cubic_coefficient_alpha,
        damping,
    }
    .response(drive_force, freq_grid)
}

/// Real roots of `t³ + b t² + c t + d`, Newton-polished, ascending.
pub fn real_cubic_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = q * q / 4.0 + p.powi(3) / 27.0;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    let poly = |t: f64| ((t + b) * t + c) * t + d;
    let dpoly = |t: f64| (3.0 * t + 2.0 * b) * t + c;
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let dp = dpoly(*r);
            if dp == 0.0 {
                break;
            }
            let step = poly(*r) / dp;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}
