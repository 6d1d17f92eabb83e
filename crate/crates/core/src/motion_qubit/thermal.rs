//! Thermal Fock distributions and the carrier/sideband excitation signals
//! they produce on the narrow S1/2 to D5/2 line.

use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::signal::SignalCurve;

/// Largest tail mass beyond the Fock cutoff.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Carrier signals need every `1 − η²n` to stay positive up to the cutoff.
pub const EXPANSION_LIMIT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub nbar: f64,
    pub n_max: usize,
}

impl ThermalState {
    /// Thermal state with the smallest cutoff meeting the tail tolerance.
    pub fn new(nbar: f64) -> Self {
        let n_max = if nbar <= 0.0 {
            0
        } else {
            let r = nbar / (nbar + 1.0);
            // r^(n_max + 1) < tol, with a little headroom for rounding
            ((TAIL_TOLERANCE.ln() / r.ln()).ceil() as usize).max(1)
        };
        Self { nbar, n_max }
    }

    pub fn with_cutoff(nbar: f64, n_max: usize) -> Self {
        Self { nbar, n_max }
    }

    pub fn ratio(&self) -> f64 {
        self.nbar / (self.nbar + 1.0)
    }

    /// Probability mass above `n_max`.
    pub fn tail_mass(&self) -> f64 {
        self.ratio().powi(self.n_max as i32 + 1)
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(MotionError::InvalidParameter(format!("nbar must be >= 0, got {}", self.nbar)));
        }
        let tail = self.tail_mass();
        if tail >= TAIL_TOLERANCE {
            return Err(MotionError::TruncationTooSmall { n_max: self.n_max, tail });
        }
        Ok(())
    }
}

/// `P(n) = r^n / (n̄ + 1)` for `n = 0..=n_max`.
pub fn thermal_distribution(state: &ThermalState) -> Result<Vec<f64>, MotionError> {
    state.validate()?;
    let r = state.ratio();
    let p0 = 1.0 / (state.nbar + 1.0);
    let mut out = Vec::with_capacity(state.n_max + 1);
    let mut p = p0;
    for _ in 0..=state.n_max {
        out.push(p);
        p *= r;
    }
    Ok(out)
}

pub fn mean_occupation(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(n, q)| n as f64 * q).sum()
}

/// Coherent drive on the 674 nm line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandDrive {
    /// Lamb-Dicke parameter.
    pub eta: f64,
    /// Carrier Rabi frequency (rad/s).
    pub omega0: f64,
    /// −1 red sideband, 0 carrier, +1 blue sideband.
    pub order: i32,
    /// Pulse duration (s).
    pub duration: f64,
    /// Detuning from the addressed line (rad/s).
    pub detuning: f64,
}

impl SidebandDrive {
    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(MotionError::InvalidParameter("eta must be >= 0".into()));
        }
        if !(self.duration >= 0.0) {
            return Err(MotionError::InvalidParameter("duration must be >= 0".into()));
        }
        if !(-1..=1).contains(&self.order) {
            return Err(MotionError::InvalidParameter(format!("order must be -1, 0 or 1, got {}", self.order)));
        }
        if !self.omega0.is_finite() || !self.detuning.is_finite() {
            return Err(MotionError::InvalidParameter("non-finite drive frequency".into()));
        }
        Ok(())
    }

    /// Rabi frequency out of Fock state `n` on this line.
    pub fn rabi(&self, n: usize) -> f64 {
        let n = n as f64;
        match self.order {
            -1 => self.eta * self.omega0 * n.sqrt(),
            1 => self.eta * self.omega0 * (n + 1.0).sqrt(),
            _ => self.omega0 * (1.0 - self.eta * self.eta * n),
        }
    }
}

/// Excitation probability of a two-level system driven at Rabi frequency
/// `rabi` and detuning `delta` for time `t`.
pub fn rabi_flop(rabi: f64, delta: f64, t: f64) -> f64 {
    let w2 = rabi * rabi + delta * delta;
    if w2 == 0.0 {
        return 0.0;
    }
    let s = (w2.sqrt() * t / 2.0).sin();
    rabi * rabi / w2 * s * s
}

/// D5/2 population after a carrier pulse of each duration in `t_grid`:
/// `Σ P(n) sin²(Ω₀(1 − η²n)t/2)`.
pub fn carrier_rabi_signal(state: &ThermalState, drive: &SidebandDrive, t_grid: &[f64]) -> Result<SignalCurve, MotionError> {
    drive.validate()?;
    if drive.order != 0 {
        return Err(MotionError::InvalidParameter("carrier signal needs order 0".into()));
    }
    let value = drive.eta * drive.eta * state.n_max as f64;
    if value >= EXPANSION_LIMIT {
        return Err(MotionError::ExpansionInvalid {
            value,
            limit: EXPANSION_LIMIT,
        });
    }
    let p = thermal_distribution(state)?;
    let rabi: Vec<f64> = (0..p.len()).map(|n| drive.rabi(n)).collect();
    Ok(SignalCurve::from_fn(t_grid, |t| {
        p.iter()
            .zip(&rabi)
            .map(|(pn, w)| pn * rabi_flop(*w, drive.detuning, t))
            .sum()
    }))
}

/// Sideband excitation probability after a pulse of length `t`,
/// `Σ P(n) sin²(Ω_n t / 2)` generalised to a detuned drive.
pub fn sideband_excitation(state: &ThermalState, drive: &SidebandDrive, t: f64) -> Result<f64, MotionError> {
    drive.validate()?;
    if drive.order == 0 {
        return Err(MotionError::InvalidParameter("sideband excitation needs order -1 or +1".into()));
    }
    let p = thermal_distribution(state)?;
    Ok(p.iter()
        .enumerate()
        .map(|(n, pn)| pn * rabi_flop(drive.rabi(n), drive.detuning, t))
        .sum())
}

/// Excitation against 674 nm detuning from the carrier, `detuning_grid` in
/// rad/s, with sideband lines at `±axial_frequency` and a constant
/// off-resonant carrier background. Pulse length is `drive.duration`.
pub fn sideband_spectrum(
    state: &ThermalState,
    drive: &SidebandDrive,
    axial_frequency: f64,
    detuning_grid: &[f64],
    carrier_offset: f64,
) -> Result<SignalCurve, MotionError> {
    drive.validate()?;
    if !(0.0..=1.0).contains(&carrier_offset) {
        return Err(MotionError::InvalidParameter("carrier offset must lie in [0, 1]".into()));
    }
    let p = thermal_distribution(state)?;
    let red = SidebandDrive { order: -1, ..*drive };
    let blue = SidebandDrive { order: 1, ..*drive };
    let red_rabi: Vec<f64> = (0..p.len()).map(|n| red.rabi(n)).collect();
    let blue_rabi: Vec<f64> = (0..p.len()).map(|n| blue.rabi(n)).collect();
    let t = drive.duration;
    Ok(SignalCurve::from_fn(detuning_grid, |d| {
        let r: f64 = p
            .iter()
            .zip(&red_rabi)
            .map(|(pn, w)| pn * rabi_flop(*w, d + axial_frequency, t))
            .sum();
        let b: f64 = p
            .iter()
            .zip(&blue_rabi)
            .map(|(pn, w)| pn * rabi_flop(*w, d - axial_frequency, t))
            .sum();
        (carrier_offset + r + b).min(1.0)
    }))
}

/// Red and blue sideband excitation after each heating delay, with
/// `n̄(t) = nbar0 + rate · t` and a constant carrier background.
pub fn heating_scan(
    nbar0: f64,
    rate: f64,
    delays: &[f64],
    rsb: &SidebandDrive,
    bsb: &SidebandDrive,
    carrier_offset: f64,
) -> Result<(SignalCurve, SignalCurve), MotionError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(MotionError::InvalidParameter("heating rate must be >= 0".into()));
    }
    if delays.windows(2).any(|w| w[1] < w[0]) {
        return Err(MotionError::InvalidParameter("delays must be sorted".into()));
    }
    if rsb.order != -1 || bsb.order != 1 {
        return Err(MotionError::InvalidParameter("probe pair must be (red, blue)".into()));
    }
    let mut red = Vec::with_capacity(delays.len());
    let mut blue = Vec::with_capacity(delays.len());
    for &t in delays {
        let state = ThermalState::new(nbar0 + rate * t);
        red.push((carrier_offset + sideband_excitation(&state, rsb, rsb.duration)?).min(1.0));
        blue.push((carrier_offset + sideband_excitation(&state, bsb, bsb.duration)?).min(1.0));
    }
    Ok((
        SignalCurve {
            x: delays.to_vec(),
            y: red,
            y_err: None,
        },
        SignalCurve {
            x: delays.to_vec(),
            y: blue,
            y_err: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;

    #[test]
    fn ground_state_distribution() {
        assert_eq!(thermal_distribution(&ThermalState::new(0.0)).unwrap(), vec![1.0]);
        let p = thermal_distribution(&ThermalState::new(0.05)).unwrap();
        assert!((p[0] - 1.0 / 1.05).abs() < 1e-15);
    }

    #[test]
    fn short_cutoff_rejected() {
        let s = ThermalState::with_cutoff(12.0, 50);
        assert!(matches!(thermal_distribution(&s), Err(MotionError::TruncationTooSmall { .. })));
    }

    #[test]
    fn expansion_limit_enforced() {
        let drive = SidebandDrive {
            eta: 0.1,
            omega0: TWO_PI * 180e3,
            order: 0,
            duration: 0.0,
            detuning: 0.0,
        };
        assert!(matches!(
            carrier_rabi_signal(&ThermalState::new(20.0), &drive, &[1e-6]),
            Err(MotionError::ExpansionInvalid { .. })
        ));
    }

    #[test]
    fn detuned_flop_bounded_by_lorentzian() {
        for k in 0..50 {
            let t = k as f64 * 1e-6;
            let p = rabi_flop(1e5, 1e5, t);
            assert!(p <= 0.5 + 1e-15);
        }
    }
}
