//! Resolved-sideband cooling: a continuous stage on the quench-broadened
//! S1/2 to D5/2 red sideband followed by discrete red-sideband π pulses
//! with ideal repumping.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::thermal::{mean_occupation, thermal_distribution, ThermalState};
use super::MotionError;
use crate::constants::TWO_PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingProtocol {
    /// Length of the continuous stage (s).
    pub continuous_duration: f64,
    /// Effective linewidth of the quenched 674 nm line (1/s).
    pub quench_rate: f64,
    /// Number of red-sideband π pulses after the continuous stage.
    pub pulsed_transfers: usize,
    pub eta: f64,
    /// Carrier Rabi frequency of the cooling beam (rad/s).
    pub carrier_rabi: f64,
    /// Axial trap frequency (rad/s).
    pub axial_frequency: f64,
    /// Ambient heating (quanta/s).
    pub heating_rate: f64,
    /// Lamb-Dicke parameter for the recoil of the quench photon.
    pub recoil_eta: f64,
    /// Include ambient heating, recoil and off-resonant carrier and blue
    /// sideband excitation.
    pub heating_terms: bool,
    /// Extra Fock states above the initial cutoff.
    pub cutoff_headroom: usize,
}

impl Default for CoolingProtocol {
    fn default() -> Self {
        Self {
            continuous_duration: 2e-3,
            quench_rate: 1.5e5,
            pulsed_transfers: 2,
            eta: 0.05,
            carrier_rabi: TWO_PI * 70e3,
            axial_frequency: TWO_PI * 1e6,
            heating_rate: 16.0,
            recoil_eta: 0.05,
            heating_terms: true,
            cutoff_headroom: 20,
        }
    }
}

impl CoolingProtocol {
    pub fn validate(&self) -> Result<(), MotionError> {
        let positive = [
            ("quench_rate", self.quench_rate),
            ("axial_frequency", self.axial_frequency),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MotionError::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        let non_negative = [
            ("continuous_duration", self.continuous_duration),
            ("eta", self.eta),
            ("carrier_rabi", self.carrier_rabi),
            ("heating_rate", self.heating_rate),
            ("recoil_eta", self.recoil_eta),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MotionError::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Duration of one red-sideband π pulse for `n = 1`.
    pub fn pulse_duration(&self) -> f64 {
        std::f64::consts::PI / (self.eta * self.carrier_rabi)
    }

    /// Scattering rate through the quenched line at Rabi frequency `rabi`
    /// and detuning `delta`.
    fn quench_rate_for(&self, rabi: f64, delta: f64) -> f64 {
        let g = self.quench_rate;
        rabi * rabi * g / (g * g + 2.0 * rabi * rabi + 4.0 * delta * delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingResult {
    /// Mean occupation after each stage, starting with the initial state.
    pub stages: Vec<(String, f64)>,
    pub distribution: Vec<f64>,
}

impl CoolingResult {
    pub fn nbar(&self) -> f64 {
        mean_occupation(&self.distribution)
    }
}

/// Rate-equation generator on Fock populations, reflecting at the cutoff.
fn rate_matrix(p: &CoolingProtocol, n_states: usize, continuous: bool) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(n_states, n_states);
    let mut add = |from: usize, to: usize, rate: f64| {
        if rate > 0.0 {
            m[(to, from)] += rate;
            m[(from, from)] -= rate;
        }
    };
    let w = p.axial_frequency;
    for n in 0..n_states {
        let nf = n as f64;
        let up_ok = n + 1 < n_states;
        let mut events = 0.0;
        if continuous {
            let cool = p.quench_rate_for(p.eta * p.carrier_rabi * nf.sqrt(), 0.0);
            if n > 0 {
                add(n, n - 1, cool);
            }
            events += cool;
            if p.heating_terms {
                let blue = p.quench_rate_for(p.eta * p.carrier_rabi * (nf + 1.0).sqrt(), 2.0 * w);
                if up_ok {
                    add(n, n + 1, blue);
                }
                let carrier = p.quench_rate_for(p.carrier_rabi * (1.0 - p.eta * p.eta * nf).abs(), w);
                events += blue + carrier;
            }
        }
        if p.heating_terms {
            let eta2 = p.recoil_eta * p.recoil_eta;
            if up_ok {
                add(n, n + 1, p.heating_rate * (nf + 1.0) + events * eta2 * (nf + 1.0));
            }
            if n > 0 {
                add(n, n - 1, p.heating_rate * nf + events * eta2 * nf);
            }
        }
    }
    m
}

fn evolve(p: &CoolingProtocol, dist: &[f64], t: f64, continuous: bool) -> Vec<f64> {
    if t == 0.0 {
        return dist.to_vec();
    }
    let m = rate_matrix(p, dist.len(), continuous) * t;
    let out = m.exp() * DVector::from_column_slice(dist);
    // clip rounding below zero
    out.iter().map(|v| v.max(0.0)).collect()
}

/// One red-sideband π pulse timed for `n = 1` followed by ideal repumping:
/// `n → n − 1` with probability `sin²(π√n / 2)`.
pub fn apply_transfer_pulse(dist: &[f64]) -> Vec<f64> {
    let mut out = dist.to_vec();
    for n in 1..dist.len() {
        let s = (std::f64::consts::FRAC_PI_2 * (n as f64).sqrt()).sin();
        let moved = dist[n] * s * s;
        out[n] -= moved;
        out[n - 1] += moved;
    }
    out
}

/// Runs the continuous stage and `pulsed_transfers` π pulses on `initial`.
pub fn sideband_cool(initial: &ThermalState, protocol: &CoolingProtocol) -> Result<CoolingResult, MotionError> {
    protocol.validate()?;
    let mut dist = thermal_distribution(initial)?;
    dist.resize(dist.len() + protocol.cutoff_headroom, 0.0);
    let mut stages = vec![("initial".to_string(), mean_occupation(&dist))];
    dist = evolve(protocol, &dist, protocol.continuous_duration, true);
    stages.push(("continuous".to_string(), mean_occupation(&dist)));
    for k in 0..protocol.pulsed_transfers {
        dist = apply_transfer_pulse(&dist);
        dist = evolve(protocol, &dist, protocol.pulse_duration(), false);
        stages.push((format!("pulse {}", k + 1), mean_occupation(&dist)));
    }
    let total: f64 = dist.iter().sum();
    for v in dist.iter_mut() {
        *v /= total;
    }
    Ok(CoolingResult { stages, distribution: dist })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_pulse_empties_first_level() {
        let out = apply_transfer_pulse(&[0.5, 0.5]);
        assert!((out[0] - 1.0).abs() < 1e-15);
        assert!(out[1].abs() < 1e-15);
    }

    #[test]
    fn generator_conserves_probability() {
        let m = rate_matrix(&CoolingProtocol::default(), 40, true);
        for j in 0..40 {
            assert!(m.column(j).sum().abs() < 1e-9 * m[(j, j)].abs().max(1.0));
        }
    }
}
