//! Optical pumping into S1/2 m = +1/2 with a σ⁺ cooling beam.

use serde::{Deserialize, Serialize};

use super::bloch::{diagonal_state, evolve};
use super::levels::{LaserField, LevelScheme, Polarization, S12};
use super::liouvillian::build_liouvillian;
use super::OpticsError;

/// Beams used during the pumping pulse; the cooling beam polarisation is
/// replaced by the requested σ⁺ purity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpingBeams {
    pub pump_detuning_mhz: f64,
    pub pump_saturation: f64,
    pub repump: Option<LaserField>,
}

impl Default for PumpingBeams {
    fn default() -> Self {
        Self {
            pump_detuning_mhz: 0.0,
            pump_saturation: 1.0,
            repump: Some(LaserField::repump_1092(-14.0, 7.0, Polarization::linear_perpendicular(), 0.0)),
        }
    }
}

/// Population of S1/2 m = +1/2 after a pumping pulse of `pulse_duration`
/// (s) starting from an equal mixture of the two ground states.
pub fn pumping_fidelity(scheme: &LevelScheme, sigma_plus_purity: f64, pulse_duration: f64) -> Result<f64, OpticsError> {
    pumping_fidelity_with(scheme, &PumpingBeams::default(), sigma_plus_purity, pulse_duration)
}

pub fn pumping_fidelity_with(
    scheme: &LevelScheme,
    beams: &PumpingBeams,
    sigma_plus_purity: f64,
    pulse_duration: f64,
) -> Result<f64, OpticsError> {
    if !(0.0..=1.0).contains(&sigma_plus_purity) {
        return Err(OpticsError::InvalidField(format!(
            "purity must lie in [0, 1], got {sigma_plus_purity}"
        )));
    }
    if !(pulse_duration >= 0.0 && pulse_duration.is_finite()) {
        return Err(OpticsError::InvalidField("pulse duration must be >= 0".into()));
    }
    let mut fields = vec![LaserField::cooling_422(
        beams.pump_detuning_mhz,
        beams.pump_saturation,
        Polarization::circular(sigma_plus_purity),
        0.0,
    )];
    fields.extend(beams.repump.clone());
    let l = build_liouvillian(scheme, &fields)?;
    let mut p0 = vec![0.0; l.dimension];
    p0[scheme.state_index(S12, -1)] = 0.5;
    p0[scheme.state_index(S12, 1)] = 0.5;
    let rho = evolve(&l, &diagonal_state(&p0), pulse_duration)?;
    Ok(rho.populations[scheme.state_index(S12, 1)])
}
