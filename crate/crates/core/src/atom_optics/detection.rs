//! Bright/dark discrimination from photon counts with a threshold.

use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};

use super::OpticsError;
use crate::signal::logspace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    /// Detected count rate of a fluorescing ion, background included (1/s).
    pub bright_rate: f64,
    /// Background count rate (1/s).
    pub dark_rate: f64,
    pub detection_time: f64,
    /// Lifetime of the shelving level (s); `f64::INFINITY` disables decay.
    pub shelved_lifetime: f64,
    /// Fraction of scattered photons that are counted.
    pub detection_efficiency: f64,
}

impl DetectionModel {
    /// 70 kHz bright, 1 kHz background, 1 ms, D5/2 shelving.
    pub fn paper() -> Self {
        Self {
            bright_rate: 70e3,
            dark_rate: 1e3,
            detection_time: 1e-3,
            shelved_lifetime: 0.39,
            detection_efficiency: 2.5e-3,
        }
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if !(self.bright_rate >= 0.0 && self.dark_rate >= 0.0)
            || !self.bright_rate.is_finite()
            || !self.dark_rate.is_finite()
        {
            return Err(OpticsError::InvalidDetection("count rates must be finite and >= 0".into()));
        }
        if !(self.detection_time > 0.0 && self.detection_time.is_finite()) {
            return Err(OpticsError::InvalidDetection("detection time must be > 0".into()));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(OpticsError::InvalidDetection("detection efficiency must lie in (0, 1]".into()));
        }
        if !(self.shelved_lifetime > 0.0) {
            return Err(OpticsError::InvalidDetection("shelved lifetime must be > 0".into()));
        }
        Ok(())
    }

    /// Probability that the shelved ion decays during detection.
    pub fn shelf_decay_probability(&self) -> f64 {
        -(-self.detection_time / self.shelved_lifetime).exp_m1()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionFidelity {
    /// Counts at or above this value are called bright.
    pub threshold: u64,
    /// Probability a bright ion is called dark.
    pub error_bright: f64,
    /// Probability a shelved ion is called bright.
    pub error_dark: f64,
    /// `1 − (error_bright + error_dark) / 2`.
    pub fidelity: f64,
}

impl DetectionFidelity {
    pub fn mean_error(&self) -> f64 {
        0.5 * (self.error_bright + self.error_dark)
    }

    pub fn total_error(&self) -> f64 {
        self.error_bright + self.error_dark
    }
}

/// `P(N < k)` for `N ~ Poisson(mean)`.
fn below(mean: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if mean == 0.0 {
        return 1.0;
    }
    Poisson::new(mean).expect("positive mean").cdf(k - 1)
}

/// `P(N ≥ k)`.
fn at_least(mean: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mean == 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive mean").sf(k - 1)
}

/// Threshold discrimination with the threshold chosen to minimise the mean
/// error. A shelved ion that decays during the window is counted as bright.
pub fn detection_fidelity(model: &DetectionModel) -> Result<DetectionFidelity, OpticsError> {
    model.validate()?;
    if model.bright_rate <= model.dark_rate {
        return Err(OpticsError::IndistinguishableStates);
    }
    let mu_b = model.bright_rate * model.detection_time;
    let mu_d = model.dark_rate * model.detection_time;
    let decay = model.shelf_decay_probability();
    let k_max = (mu_b + 10.0 * mu_b.sqrt() + 20.0).ceil() as u64;
    let mut best: Option<DetectionFidelity> = None;
    for k in 0..=k_max {
        let error_bright = below(mu_b, k);
        let error_dark = (1.0 - decay) * at_least(mu_d, k) + decay * at_least(mu_b, k);
        let cand = DetectionFidelity {
            threshold: k,
            error_bright,
            error_dark,
            fidelity: 1.0 - 0.5 * (error_bright + error_dark),
        };
        if best.as_ref().is_none_or(|b| cand.fidelity > b.fidelity) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one threshold"))
}

/// Detection time in `[t_min, t_max]` with the highest fidelity, found on a
/// logarithmic grid of `points` times.
pub fn optimal_detection_time(
    model: &DetectionModel,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<(f64, DetectionFidelity), OpticsError> {
    if !(t_min > 0.0 && t_max > t_min) || points < 2 {
        return Err(OpticsError::InvalidGrid("need 0 < t_min < t_max and >= 2 points".into()));
    }
    let mut best: Option<(f64, DetectionFidelity)> = None;
    for t in logspace(t_min, t_max, points) {
        let m = DetectionModel {
            detection_time: t,
            ..model.clone()
        };
        let f = detection_fidelity(&m)?;
        if best.as_ref().is_none_or(|(_, b)| f.fidelity > b.fidelity) {
            best = Some((t, f));
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_rates_rejected() {
        let m = DetectionModel {
            bright_rate: 1e3,
            ..DetectionModel::paper()
        };
        assert_eq!(detection_fidelity(&m), Err(OpticsError::IndistinguishableStates));
    }

    #[test]
    fn vanishing_window_is_a_coin_toss() {
        let m = DetectionModel {
            detection_time: 1e-12,
            ..DetectionModel::paper()
        };
        let f = detection_fidelity(&m).unwrap();
        assert!((f.fidelity - 0.5).abs() < 1e-6);
    }
}
