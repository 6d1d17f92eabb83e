//! Magnetic field noise seen by the ground-state Zeeman qubit: line
//! harmonics, a slow Ornstein-Uhlenbeck drift over lab time and white noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::constants::TWO_PI;
use crate::signal::SignalCurve;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhasePolicy {
    /// Fresh uniform phase for every shot (free-running experiment).
    Random,
    /// Experiment triggered on the line: same phase (rad) every shot.
    Fixed { phase: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineHarmonic {
    /// Hz.
    pub frequency: f64,
    /// Peak amplitude (G).
    pub amplitude: f64,
    pub phase: PhasePolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticNoiseModel {
    pub line_harmonics: Vec<LineHarmonic>,
    /// Stationary rms of the drift (G).
    pub slow_drift_amplitude: f64,
    /// Drift corner frequency (Hz); zero means a frozen offset per seed.
    pub slow_drift_bandwidth: f64,
    /// One-sided amplitude spectral density (G/√Hz).
    pub white_noise_density: f64,
    pub seed: u64,
    /// Lab time between consecutive shots (s).
    pub shot_interval: f64,
    /// Qubit frequency shift per gauss (Hz/G).
    pub zeeman_slope: f64,
}

impl MagneticNoiseModel {
    pub fn quiet(seed: u64) -> Self {
        Self {
            line_harmonics: Vec::new(),
            slow_drift_amplitude: 0.0,
            slow_drift_bandwidth: 0.0,
            white_noise_density: 0.0,
            seed,
            shot_interval: 0.02,
            zeeman_slope: 2.8e6,
        }
    }

    /// Line-triggered lab conditions: µG-level 50 and 150 Hz harmonics and
    /// white noise giving a 2.5 ms coherence time.
    pub fn lab_default(seed: u64) -> Self {
        let mut m = Self::quiet(seed);
        m.line_harmonics = vec![
            LineHarmonic {
                frequency: 50.0,
                amplitude: 1e-6,
                phase: PhasePolicy::Fixed { phase: 0.0 },
            },
            LineHarmonic {
                frequency: 150.0,
                amplitude: 0.5e-6,
                phase: PhasePolicy::Fixed { phase: 0.0 },
            },
        ];
        m.white_noise_density = white_density_for_t2(2.5e-3, m.zeeman_slope);
        m
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        for h in &self.line_harmonics {
            if !(h.frequency > 0.0 && h.frequency.is_finite()) {
                return Err(MotionError::InvalidParameter("harmonic frequency must be > 0".into()));
            }
            if !(h.amplitude >= 0.0 && h.amplitude.is_finite()) {
                return Err(MotionError::InvalidParameter("harmonic amplitude must be >= 0".into()));
            }
        }
        let non_negative = [
            ("slow_drift_amplitude", self.slow_drift_amplitude),
            ("slow_drift_bandwidth", self.slow_drift_bandwidth),
            ("white_noise_density", self.white_noise_density),
            ("shot_interval", self.shot_interval),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MotionError::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        if !self.zeeman_slope.is_finite() {
            return Err(MotionError::InvalidParameter("zeeman_slope must be finite".into()));
        }
        Ok(())
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Drift value at each of `count` lab times spaced by `interval`.
    pub(crate) fn drift_path(&self, count: usize, interval: f64) -> Vec<f64> {
        if self.slow_drift_amplitude == 0.0 {
            return vec![0.0; count];
        }
        let mut rng = self.rng(0);
        let sigma = self.slow_drift_amplitude;
        let mut x = sigma * rng.sample::<f64, _>(StandardNormal);
        let decay = (-TWO_PI * self.slow_drift_bandwidth * interval).exp();
        let kick = sigma * (1.0 - decay * decay).sqrt();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(x);
            x = decay * x + kick * rng.sample::<f64, _>(StandardNormal);
        }
        out
    }

    pub(crate) fn harmonic_phases(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.line_harmonics
            .iter()
            .map(|h| match h.phase {
                PhasePolicy::Random => rng.random::<f64>() * TWO_PI,
                PhasePolicy::Fixed { phase } => phase,
            })
            .collect()
    }

    /// `∫₀^T B_lines(t) dt` for the given starting phases.
    pub(crate) fn harmonic_integral(&self, phases: &[f64], duration: f64) -> f64 {
        self.line_harmonics
            .iter()
            .zip(phases)
            .map(|(h, phi)| {
                let w = TWO_PI * h.frequency;
                h.amplitude / w * (phi.cos() - (w * duration + phi).cos())
            })
            .sum()
    }
}

/// White-noise density producing coherence decay `exp(−T/T₂)`.
pub fn white_density_for_t2(t2: f64, zeeman_slope: f64) -> f64 {
    let k = TWO_PI * zeeman_slope;
    (4.0 / (t2 * k * k)).sqrt()
}

/// One realisation of `B(t)` sampled every `dt` over `duration`, with
/// time in seconds and field in gauss.
pub fn noise_trajectory(noise: &MagneticNoiseModel, duration: f64, dt: f64) -> Result<SignalCurve, MotionError> {
    noise.validate()?;
    if !(dt > 0.0 && duration >= dt && duration.is_finite()) {
        return Err(MotionError::InvalidParameter("need dt > 0 and duration >= dt".into()));
    }
    let count = (duration / dt).round() as usize;
    let t: Vec<f64> = (0..count).map(|k| k as f64 * dt).collect();
    let drift = noise.drift_path(count, dt);
    let mut rng = noise.rng(1);
    let phases = noise.harmonic_phases(&mut rng);
    let white_sigma = noise.white_noise_density / (2.0 * dt).sqrt();
    let y = t
        .iter()
        .zip(&drift)
        .map(|(&ti, &d)| {
            let lines: f64 = noise
                .line_harmonics
                .iter()
                .zip(&phases)
                .map(|(h, phi)| h.amplitude * (TWO_PI * h.frequency * ti + phi).sin())
                .sum();
            let white = if white_sigma > 0.0 {
                white_sigma * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            lines + d + white
        })
        .collect();
    Ok(SignalCurve { x: t, y, y_err: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quiet_model_is_zero() {
        let tr = noise_trajectory(&MagneticNoiseModel::quiet(3), 0.1, 1e-4).unwrap();
        assert!(tr.y.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn harmonic_integral_matches_quadrature() {
        let mut m = MagneticNoiseModel::quiet(0);
        m.line_harmonics.push(LineHarmonic {
            frequency: 50.0,
            amplitude: 2e-6,
            phase: PhasePolicy::Fixed { phase: 0.3 },
        });
        let t = 3.7e-3;
        let n = 20_000;
        let h = t / n as f64;
        let quad: f64 = (0..n)
            .map(|k| 2e-6 * (TWO_PI * 50.0 * (k as f64 + 0.5) * h + 0.3).sin() * h)
            .sum();
        assert!((m.harmonic_integral(&[0.3], t) - quad).abs() < 1e-12);
    }

    #[test]
    fn negative_amplitude_rejected() {
        let mut m = MagneticNoiseModel::quiet(0);
        m.line_harmonics.push(LineHarmonic {
            frequency: 50.0,
            amplitude: -1.0,
            phase: PhasePolicy::Random,
        });
        assert!(m.validate().is_err());
    }
}
