//! Micromotion compensation scan: an rf tone at `Ω_rf + ω_ax` is mixed down
//! by the trap nonlinearity into a resonant axial force proportional to the
//! ion's distance from the rf null. The driven motion Doppler-broadens the
//! cooling transition and the fluorescence drops.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::duffing::DuffingOscillator;
use super::{secular_frequencies, TrapConfig, TrapError};
use crate::constants::{AtomicConstants, TWO_PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    Up,
    Down,
}

impl SweepDirection {
    pub fn label(self) -> &'static str {
        match self {
            SweepDirection::Up => "up",
            SweepDirection::Down => "down",
        }
    }
}

/// Parameters of the injected tone and the response of the compensation
/// electrode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicromotionDrive {
    /// Compensation voltage that places the ion on the rf null (V).
    pub v_opt: f64,
    /// Axial damping by laser cooling γ (1/s).
    pub damping: f64,
    /// Shift of the axial frequency per volt on the compensation electrode
    /// (rad/s per V).
    pub frequency_slope: f64,
    /// Resonant force per volt of displacement from `v_opt` (N/V).
    pub mixing: f64,
}

impl Default for MicromotionDrive {
    fn default() -> Self {
        Self {
            v_opt: -0.1,
            damping: TWO_PI * 10e3,
            frequency_slope: TWO_PI * 20e3,
            mixing: 2.5e-17,
        }
    }
}

/// Cooling-beam parameters that turn a motional amplitude into a count rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluorescenceProbe {
    /// Laser detuning from the cooling transition (rad/s).
    pub detuning: f64,
    /// Natural linewidth of the cooling transition (rad/s).
    pub linewidth: f64,
    pub saturation: f64,
    /// Projection of the laser wave vector on the trap axis (1/m).
    pub wavevector: f64,
    /// Count rate of an ion at rest (counts per ms).
    pub rest_counts_per_ms: f64,
    pub background_per_ms: f64,
}

impl Default for FluorescenceProbe {
    fn default() -> Self {
        let c = AtomicConstants::default();
        let gamma = c.p12_decay_rate();
        Self {
            detuning: -gamma / 2.0,
            linewidth: gamma,
            saturation: 2.0,
            wavevector: c.wavenumber_422() * std::f64::consts::FRAC_1_SQRT_2,
            rest_counts_per_ms: 60.0,
            background_per_ms: 1.0,
        }
    }
}

impl FluorescenceProbe {
    /// Count rate for a harmonic oscillation of amplitude `amplitude` at
    /// angular frequency `omega`.
    pub fn counts_per_ms(&self, amplitude: f64, omega: f64) -> f64 {
        let u0 = 2.0 * self.detuning / self.linewidth;
        let a = 2.0 * self.wavevector * amplitude * omega / self.linewidth;
        let c = 1.0 + self.saturation;
        let ratio = doppler_averaged_lineshape(u0, a, c) * (c + u0 * u0);
        self.background_per_ms + self.rest_counts_per_ms * ratio
    }
}

/// Phase average of `1 / (c + (u0 − a sin φ)²)` over a full period, in
/// closed form.
pub fn doppler_averaged_lineshape(u0: f64, a: f64, c: f64) -> f64 {
    let sc = c.sqrt();
    if a == 0.0 {
        return 1.0 / (c + u0 * u0);
    }
    let z = Complex64::new(u0, -sc);
    // √(z−a)√(z+a) has its branch cut on [−a, a] only
    let root = (z - a).sqrt() * (z + a).sqrt();
    (1.0 / root).im / sc
}

/// Two-dimensional fluorescence map, one row per compensation voltage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicromotionMap {
    pub sweep: SweepDirection,
    pub v_grid: Vec<f64>,
    /// Injected drive frequencies Ω_drive/2π (Hz).
    pub f_grid: Vec<f64>,
    /// `counts[i][j]` for `v_grid[i]`, `f_grid[j]` (counts per ms).
    pub counts: Vec<Vec<f64>>,
    /// Steady-state motional amplitude for each point (m).
    pub amplitude: Vec<Vec<f64>>,
    /// Whether each row crosses a bistable region.
    pub bistable: Vec<bool>,
}

impl MicromotionMap {
    pub fn row_min(&self, i: usize) -> f64 {
        self.counts[i].iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Fluorescence for one sweep direction. `f_grid` holds the injected drive
/// frequency in Hz; the resonant force acts at `2π f − Ω_rf`.
pub fn micromotion_scan(
    cfg: &TrapConfig,
    drive: &MicromotionDrive,
    v_grid: &[f64],
    f_grid: &[f64],
    sweep: SweepDirection,
    probe: &FluorescenceProbe,
) -> Result<MicromotionMap, TrapError> {
    let [up, down] = micromotion_scan_both(cfg, drive, v_grid, f_grid, probe)?;
    Ok(match sweep {
        SweepDirection::Up => up,
        SweepDirection::Down => down,
    })
}

/// Both sweep directions from a single pass over the grid.
pub fn micromotion_scan_both(
    cfg: &TrapConfig,
    drive: &MicromotionDrive,
    v_grid: &[f64],
    f_grid: &[f64],
    probe: &FluorescenceProbe,
) -> Result<[MicromotionMap; 2], TrapError> {
    if v_grid.is_empty() || f_grid.is_empty() {
        return Err(TrapError::InvalidGrid("empty voltage or frequency grid".into()));
    }
    if !(drive.damping > 0.0) {
        return Err(TrapError::InvalidConfig("damping must be > 0".into()));
    }
    let omega_ax = secular_frequencies(cfg)?.omega_ax;
    let omega_grid: Vec<f64> = f_grid
        .iter()
        .map(|f| TWO_PI * f - cfg.rf_frequency)
        .collect();
    if omega_grid.iter().any(|w| *w < 0.0) {
        return Err(TrapError::InvalidGrid(
            "drive frequencies must lie above the rf frequency".into(),
        ));
    }

    let mut maps = [SweepDirection::Up, SweepDirection::Down].map(|sweep| MicromotionMap {
        sweep,
        v_grid: v_grid.to_vec(),
        f_grid: f_grid.to_vec(),
        counts: Vec::with_capacity(v_grid.len()),
        amplitude: Vec::with_capacity(v_grid.len()),
        bistable: Vec::with_capacity(v_grid.len()),
    });
    for &v in v_grid {
        let offset = v - drive.v_opt;
        let osc = DuffingOscillator {
            omega0: omega_ax + drive.frequency_slope * offset,
            mass: cfg.ion_mass,
            alpha: cfg.cubic_coefficient_alpha,
            damping: drive.damping,
        };
        let resp = osc.response(drive.mixing * offset.abs(), &omega_grid)?;
        for (map, amps) in maps
            .iter_mut()
            .zip([&resp.amplitude_up, &resp.amplitude_down])
        {
            map.counts.push(
                amps.iter()
                    .zip(&omega_grid)
                    .map(|(a, w)| probe.counts_per_ms(*a, *w))
                    .collect(),
            );
            map.amplitude.push(amps.clone());
            map.bistable.push(resp.bistable);
        }
    }
    Ok(maps)
}
