use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OpticsError;
use crate::constants::{AtomicConstants, TWO_PI};

/// One fine-structure level with its Zeeman manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub label: String,
    /// Twice the total angular momentum.
    pub two_j: i64,
    pub g_factor: f64,
}

impl Level {
    pub fn new(label: &str, two_j: i64, g_factor: f64) -> Self {
        Self {
            label: label.to_string(),
            two_j,
            g_factor,
        }
    }

    pub fn sublevel_count(&self) -> usize {
        (self.two_j + 1) as usize
    }

    /// Doubled magnetic quantum numbers, ascending.
    pub fn two_m(&self) -> impl Iterator<Item = i64> + '_ {
        (-self.two_j..=self.two_j).step_by(2)
    }
}

/// Spontaneous decay from `upper` into `lower`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub upper: usize,
    pub lower: usize,
    /// Total decay rate of the upper level (1/s).
    pub rate: f64,
    pub branching: f64,
    /// Multipole order of the emission: 1 for E1, 2 for E2.
    pub rank: i64,
}

impl DecayChannel {
    pub fn partial_rate(&self) -> f64 {
        self.rate * self.branching
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    pub levels: Vec<Level>,
    pub decay_channels: Vec<DecayChannel>,
    /// Magnetic field along the quantisation axis (G).
    pub magnetic_field: f64,
    /// Bohr magneton over h (Hz/G).
    pub bohr_hz_per_gauss: f64,
}

pub const S12: usize = 0;
pub const P12: usize = 1;
pub const D32: usize = 2;

impl LevelScheme {
    /// The eight-state S1/2, P1/2, D3/2 system of ⁸⁸Sr⁺.
    pub fn sr88(constants: &AtomicConstants, magnetic_field: f64) -> Self {
        let gamma_p = constants.p12_decay_rate();
        let b = constants.p12_to_d32_branching;
        Self {
            levels: vec![
                Level::new("S1/2", 1, constants.g_s12),
                Level::new("P1/2", 1, constants.g_p12),
                Level::new("D3/2", 3, constants.g_d32),
            ],
            decay_channels: vec![
                DecayChannel {
                    upper: P12,
                    lower: S12,
                    rate: gamma_p,
                    branching: 1.0 - b,
                    rank: 1,
                },
                DecayChannel {
                    upper: P12,
                    lower: D32,
                    rate: gamma_p,
                    branching: b,
                    rank: 1,
                },
                DecayChannel {
                    upper: D32,
                    lower: S12,
                    rate: 1.0 / constants.d32_lifetime_s,
                    branching: 1.0,
                    rank: 2,
                },
            ],
            magnetic_field,
            bohr_hz_per_gauss: constants.bohr_hz_per_gauss(),
        }
    }

    pub fn with_field(&self, magnetic_field: f64) -> Self {
        Self {
            magnetic_field,
            ..self.clone()
        }
    }

    pub fn dimension(&self) -> usize {
        self.levels.iter().map(Level::sublevel_count).sum()
    }

    /// Index of the first sublevel of `level` in the state vector.
    pub fn offset(&self, level: usize) -> usize {
        self.levels[..level].iter().map(Level::sublevel_count).sum()
    }

    /// Index of `|level, m⟩` with `m = two_m / 2`.
    pub fn state_index(&self, level: usize, two_m: i64) -> usize {
        self.offset(level) + ((two_m + self.levels[level].two_j) / 2) as usize
    }

    /// `(level, two_m)` for every basis state, in state-vector order.
    pub fn states(&self) -> Vec<(usize, i64)> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(l, lv)| lv.two_m().map(move |m| (l, m)))
            .collect()
    }

    /// Zeeman shift of `|level, m⟩` (rad/s).
    pub fn zeeman_shift(&self, level: usize, two_m: i64) -> f64 {
        TWO_PI * self.bohr_hz_per_gauss * self.magnetic_field * self.levels[level].g_factor
            * two_m as f64
            / 2.0
    }

    /// Total decay rate out of `level`, if it decays at all.
    pub fn decay_rate(&self, level: usize) -> Option<f64> {
        self.decay_channels
            .iter()
            .find(|c| c.upper == level)
            .map(|c| c.rate)
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if !self.magnetic_field.is_finite() {
            return Err(OpticsError::InvalidScheme("non-finite magnetic field".into()));
        }
        for lv in &self.levels {
            if lv.two_j < 0 {
                return Err(OpticsError::InvalidScheme(format!("{}: negative J", lv.label)));
            }
        }
        for c in &self.decay_channels {
            if c.upper >= self.levels.len() || c.lower >= self.levels.len() {
                return Err(OpticsError::InvalidScheme("decay channel references unknown level".into()));
            }
            if !(c.rate >= 0.0 && c.branching >= 0.0) {
                return Err(OpticsError::InvalidScheme("negative decay rate or branching".into()));
            }
        }
        for upper in 0..self.levels.len() {
            let chans: Vec<_> = self.decay_channels.iter().filter(|c| c.upper == upper).collect();
            if chans.is_empty() {
                continue;
            }
            let total: f64 = chans.iter().map(|c| c.branching).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(OpticsError::InvalidScheme(format!(
                    "branching out of {} sums to {total}",
                    self.levels[upper].label
                )));
            }
            if chans.iter().any(|c| c.rate != chans[0].rate) {
                return Err(OpticsError::InvalidScheme(format!(
                    "inconsistent total rate for {}",
                    self.levels[upper].label
                )));
            }
        }
        Ok(())
    }
}

/// Light polarisation in the quantisation frame as spherical components
/// `[q = −1, q = 0, q = +1]`, where component `q` drives `Δm = q` in
/// absorption.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polarization(pub [Complex64; 3]);

impl Polarization {
    pub fn new(components: [Complex64; 3]) -> Result<Self, OpticsError> {
        let norm = components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(OpticsError::InvalidField("zero polarisation vector".into()));
        }
        Ok(Self(components.map(|c| c / norm)))
    }

    fn real(m: f64, z: f64, p: f64) -> Self {
        Self([m, z, p].map(|v| Complex64::new(v, 0.0)))
    }

    pub fn pi() -> Self {
        Self::real(0.0, 1.0, 0.0)
    }

    pub fn sigma_plus() -> Self {
        Self::real(0.0, 0.0, 1.0)
    }

    pub fn sigma_minus() -> Self {
        Self::real(1.0, 0.0, 0.0)
    }

    /// Linear polarisation perpendicular to the field, `x̂ = (e₋₁ − e₊₁)/√2`.
    pub fn linear_perpendicular() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, 0.0, -h)
    }

    /// Circular beam along the field with σ⁺ power fraction `purity`.
    pub fn circular(purity: f64) -> Self {
        let p = purity.clamp(0.0, 1.0);
        Self::real((1.0 - p).sqrt(), 0.0, p.sqrt())
    }

    pub fn component(&self, two_q: i64) -> Complex64 {
        match two_q {
            -2 => self.0[0],
            0 => self.0[1],
            2 => self.0[2],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Exchanges the σ⁺ and σ⁻ components (mirror `m → −m`).
    pub fn mirrored(&self) -> Self {
        Self([self.0[2], self.0[1], self.0[0]])
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "pi" => Some(Self::pi()),
            "sigma_plus" => Some(Self::sigma_plus()),
            "sigma_minus" => Some(Self::sigma_minus()),
            "perpendicular" => Some(Self::linear_perpendicular()),
            _ => None,
        }
    }
}

/// Classical laser field driving `lower → upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserField {
    pub lower: usize,
    pub upper: usize,
    /// Detuning from the field-free line centre (rad/s).
    pub detuning: f64,
    /// I / I_sat.
    pub saturation: f64,
    pub polarization: Polarization,
    /// Laser linewidth, FWHM (rad/s).
    pub linewidth: f64,
}

impl LaserField {
    pub fn validate(&self) -> Result<(), OpticsError> {
        if !(self.saturation >= 0.0 && self.saturation.is_finite()) {
            return Err(OpticsError::InvalidField(format!(
                "saturation must be >= 0, got {}",
                self.saturation
            )));
        }
        if !(self.linewidth >= 0.0 && self.linewidth.is_finite()) {
            return Err(OpticsError::InvalidField("linewidth must be >= 0".into()));
        }
        if !self.detuning.is_finite() {
            return Err(OpticsError::InvalidField("non-finite detuning".into()));
        }
        let norm: f64 = self.polarization.0.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(OpticsError::InvalidField("polarisation not normalised".into()));
        }
        Ok(())
    }

    /// 422 nm cooling beam on S1/2 → P1/2 (detuning and linewidth in MHz).
    pub fn cooling_422(detuning_mhz: f64, saturation: f64, polarization: Polarization, linewidth_mhz: f64) -> Self {
        Self {
            lower: S12,
            upper: P12,
            detuning: TWO_PI * detuning_mhz * 1e6,
            saturation,
            polarization,
            linewidth: TWO_PI * linewidth_mhz * 1e6,
        }
    }

    /// 1092 nm repumper on D3/2 → P1/2 (detuning and linewidth in MHz).
    pub fn repump_1092(detuning_mhz: f64, saturation: f64, polarization: Polarization, linewidth_mhz: f64) -> Self {
        Self {
            lower: D32,
            upper: P12,
            detuning: TWO_PI * detuning_mhz * 1e6,
            saturation,
            polarization,
            linewidth: TWO_PI * linewidth_mhz * 1e6,
        }
    }
}
