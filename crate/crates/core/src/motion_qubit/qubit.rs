//! Zeeman qubit signals: damped Rabi flops and Monte Carlo Ramsey fringes.

use rand_distr::{Distribution, StandardNormal};

use super::noise::MagneticNoiseModel;
use super::MotionError;
use crate::constants::TWO_PI;
use crate::signal::SignalCurve;

/// `P(t) = f_R²/W² · (1 − e^(−t/τ) cos(2πWt)) / 2` with `W² = f_R² + δ²`.
/// Frequencies in Hz, times in seconds; pass `f64::INFINITY` for no decay.
pub fn qubit_rabi_signal(rabi_freq: f64, detuning: f64, t_grid: &[f64], decay_time: f64) -> Result<SignalCurve, MotionError> {
    if !(decay_time > 0.0) {
        return Err(MotionError::InvalidParameter("decay_time must be > 0".into()));
    }
    if !rabi_freq.is_finite() || !detuning.is_finite() {
        return Err(MotionError::InvalidParameter("non-finite frequency".into()));
    }
    let w2 = rabi_freq * rabi_freq + detuning * detuning;
    if w2 == 0.0 {
        return Ok(SignalCurve::from_fn(t_grid, |_| 0.0));
    }
    let w = w2.sqrt();
    let a = rabi_freq * rabi_freq / w2;
    Ok(SignalCurve::from_fn(t_grid, |t| {
        0.5 * a * (1.0 - (-t / decay_time).exp() * (TWO_PI * w * t).cos())
    }))
}

/// Ramsey fringes against free-evolution time `T` (s). Each shot picks up
/// phase `2π·δ·T + 2π·k·∫B dt`; the point value is the mean of
/// `(1 + cos φ)/2` over shots and `y_err` its standard error.
pub fn ramsey_signal(
    noise: &MagneticNoiseModel,
    detuning: f64,
    t_grid: &[f64],
    shots_per_point: usize,
) -> Result<SignalCurve, MotionError> {
    noise.validate()?;
    if shots_per_point == 0 {
        return Err(MotionError::InvalidParameter("shots_per_point must be >= 1".into()));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(MotionError::InvalidParameter("Ramsey times must be >= 0".into()));
    }
    let shots = shots_per_point;
    let drift = noise.drift_path(t_grid.len() * shots, noise.shot_interval);
    let k = TWO_PI * noise.zeeman_slope;
    let white_var_rate = k * k * noise.white_noise_density.powi(2) / 2.0;
    let mut y = Vec::with_capacity(t_grid.len());
    let mut err = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let mut outcomes = Vec::with_capacity(shots);
        for j in 0..shots {
            let index = i * shots + j;
            let mut rng = noise.rng(1 + index as u64);
            let phases = noise.harmonic_phases(&mut rng);
            let mut phi = TWO_PI * detuning * t + k * (noise.harmonic_integral(&phases, t) + drift[index] * t);
            if white_var_rate > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                phi += (white_var_rate * t).sqrt() * z;
            }
            outcomes.push(0.5 * (1.0 + phi.cos()));
        }
        let n = shots as f64;
        let mean = outcomes.iter().sum::<f64>() / n;
        let var = if shots > 1 {
            outcomes.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        y.push(mean);
        err.push((var / n).sqrt());
    }
    Ok(SignalCurve {
        x: t_grid.to_vec(),
        y,
        y_err: Some(err),
    })
}
