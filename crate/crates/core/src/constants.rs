//! Physical constants and the versioned 88Sr+ atomic data file.
//!
//! Atomic data is read from a plain key-value file whose keys carry their
//! units (`p12_lifetime_ns = 7.39`). A copy is compiled into the crate; the
//! `IONTRAP_CONSTANTS` environment variable points at a replacement.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron mass (kg).
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Environment variable overriding the constants file path.
pub const CONSTANTS_ENV: &str = "IONTRAP_CONSTANTS";

const EMBEDDED: &str = include_str!("../data/sr88_constants.toml");

#[derive(Debug, Error)]
pub enum ConstantsError {
    #[error("cannot read constants file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed constants file: {0}")]
    Parse(String),
}

/// Atomic data in the units named by the file keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicConstants {
    pub p12_lifetime_ns: f64,
    pub p12_to_d32_branching: f64,
    pub d32_lifetime_s: f64,
    pub d52_lifetime_s: f64,
    pub g_s12: f64,
    pub g_p12: f64,
    pub g_d32: f64,
    #[serde(rename = "bohr_magneton_MHz_per_G")]
    pub bohr_magneton_mhz_per_g: f64,
    #[serde(rename = "qubit_zeeman_slope_MHz_per_G")]
    pub qubit_zeeman_slope_mhz_per_g: f64,
    pub wavelength_422_nm: f64,
    pub wavelength_1092_nm: f64,
    pub wavelength_674_nm: f64,
    pub atomic_mass_u: f64,
}

impl Default for AtomicConstants {
    fn default() -> Self {
        Self::parse(EMBEDDED).expect("embedded constants file is valid")
    }
}

impl AtomicConstants {
    pub fn parse(text: &str) -> Result<Self, ConstantsError> {
        toml::from_str(text).map_err(|e| ConstantsError::Parse(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConstantsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConstantsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Loads from `IONTRAP_CONSTANTS` when set, otherwise the built-in copy.
    pub fn load() -> Result<Self, ConstantsError> {
        match std::env::var_os(CONSTANTS_ENV) {
            Some(path) => Self::from_file(path),
            None => Ok(Self::default()),
        }
    }

    /// Total P1/2 decay rate (1/s).
    pub fn p12_decay_rate(&self) -> f64 {
        1.0 / (self.p12_lifetime_ns * 1e-9)
    }

    /// Bohr magneton over h, in Hz per gauss.
    pub fn bohr_hz_per_gauss(&self) -> f64 {
        self.bohr_magneton_mhz_per_g * 1e6
    }

    pub fn ion_mass_kg(&self) -> f64 {
        self.atomic_mass_u * ATOMIC_MASS_UNIT - ELECTRON_MASS
    }

    pub fn wavenumber_422(&self) -> f64 {
        TWO_PI / (self.wavelength_422_nm * 1e-9)
    }
}
