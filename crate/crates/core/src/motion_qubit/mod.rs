//! Axial motion and the S1/2 Zeeman qubit: thermal carrier thermometry,
//! sideband spectroscopy, sideband cooling, heating-rate scans and
//! Rabi/Ramsey signals under magnetic field noise.

use thiserror::Error;

pub mod cooling;
pub mod noise;
pub mod qubit;
pub mod thermal;

pub use cooling::{sideband_cool, CoolingProtocol, CoolingResult};
pub use noise::{noise_trajectory, LineHarmonic, MagneticNoiseModel, PhasePolicy};
pub use qubit::{qubit_rabi_signal, ramsey_signal};
pub use thermal::{
    carrier_rabi_signal, heating_scan, mean_occupation, sideband_excitation, sideband_spectrum, thermal_distribution,
    SidebandDrive, ThermalState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("Fock truncation n_max = {n_max} leaves tail mass {tail:e} (> 1e-6)")]
    TruncationTooSmall { n_max: usize, tail: f64 },
    #[error("Lamb-Dicke expansion invalid: eta^2 * n_max = {value} (must be < {limit})")]
    ExpansionInvalid { value: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
