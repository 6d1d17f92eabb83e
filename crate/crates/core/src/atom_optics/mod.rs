//! Internal-state dynamics of the ion: the eight-level S1/2, P1/2, D3/2
//! optical Bloch model, fluorescence spectra with dark resonances, optical
//! pumping and photon-count state discrimination.

use thiserror::Error;

pub mod angular;
pub mod bloch;
pub mod detection;
pub mod levels;
pub mod liouvillian;
pub mod pumping;
pub mod spectrum;

pub use bloch::{evolve, steady_state, BlochResult};
pub use detection::{detection_fidelity, optimal_detection_time, DetectionFidelity, DetectionModel};
pub use levels::{DecayChannel, LaserField, Level, LevelScheme, Polarization};
pub use liouvillian::{build_liouvillian, Liouvillian};
pub use pumping::{pumping_fidelity, pumping_fidelity_with, PumpingBeams};
pub use spectrum::{dark_resonance_positions, dark_resonance_positions_for, fluorescence_spectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("invalid level scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid laser field: {0}")]
    InvalidField(String),
    #[error("no declared transition between levels {lower} and {upper}")]
    UnknownTransition { lower: usize, upper: usize },
    #[error("steady state is not unique (null space dimension {dimension})")]
    DegenerateSteadyState { dimension: usize },
    #[error("bright and dark count rates cannot be distinguished")]
    IndistinguishableStates,
    #[error("invalid detection model: {0}")]
    InvalidDetection(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}
