//! Fluorescence versus cooling-laser detuning and the positions of the
//! two-photon dark resonances.

use super::bloch::steady_state_unchecked;
use super::detection::DetectionModel;
use super::levels::{LaserField, LevelScheme, D32, P12, S12};
use super::liouvillian::build_liouvillian;
use super::OpticsError;
use crate::constants::TWO_PI;
use crate::signal::SignalCurve;

/// Photon counts in `detection.detection_time` as the first field in
/// `fields` is tuned over `delta_grid_mhz`.
///
/// `counts = η · R(Δ) · t + background · t`. A swept field with zero
/// intensity gives the flat background line without solving the model.
pub fn fluorescence_spectrum(
    scheme: &LevelScheme,
    fields: &[LaserField],
    delta_grid_mhz: &[f64],
    detection: &DetectionModel,
) -> Result<SignalCurve, OpticsError> {
    if delta_grid_mhz.is_empty() {
        return Err(OpticsError::InvalidGrid("empty detuning grid".into()));
    }
    if fields.is_empty() {
        return Err(OpticsError::InvalidField("no laser to sweep".into()));
    }
    detection.validate()?;
    let background = detection.dark_rate * detection.detection_time;
    let mut fields = fields.to_vec();
    let mut y = Vec::with_capacity(delta_grid_mhz.len());
    for &d in delta_grid_mhz {
        fields[0].detuning = TWO_PI * d * 1e6;
        let rate = if fields[0].saturation == 0.0 {
            fields[0].validate()?;
            0.0
        } else {
            let l = build_liouvillian(scheme, &fields)?;
            steady_state_unchecked(&l)?.scattering_rate
        };
        y.push(detection.detection_efficiency * rate * detection.detection_time + background);
    }
    Ok(SignalCurve {
        x: delta_grid_mhz.to_vec(),
        y,
        y_err: None,
    })
}

fn raman_offset_mhz(scheme: &LevelScheme, two_ms: i64, two_md: i64, b: f64) -> f64 {
    let gs = scheme.levels[S12].g_factor;
    let gd = scheme.levels[D32].g_factor;
    (gd * two_md as f64 - gs * two_ms as f64) / 2.0 * scheme.bohr_hz_per_gauss * b * 1e-6
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    v
}

/// Cooling-laser detunings (MHz) of every S1/2 to D3/2 Raman resonance
/// reachable through a P1/2 sublevel, for repumper detuning `delta_1092`
/// (MHz) and field `b` (G).
pub fn dark_resonance_positions(scheme: &LevelScheme, delta_1092: f64, b: f64) -> Vec<f64> {
    let b = b.max(0.0);
    let mut out = Vec::new();
    for two_ms in scheme.levels[S12].two_m() {
        for two_md in scheme.levels[D32].two_m() {
            let linked = scheme.levels[P12]
                .two_m()
                .any(|mp| (mp - two_ms).abs() <= 2 && (mp - two_md).abs() <= 2);
            if linked {
                out.push(delta_1092 + raman_offset_mhz(scheme, two_ms, two_md, b));
            }
        }
    }
    sorted_unique(out)
}

/// Like [`dark_resonance_positions`] but keeps only pairs that the
/// polarisations of `cooling` and `repump` actually connect.
pub fn dark_resonance_positions_for(
    scheme: &LevelScheme,
    cooling: &LaserField,
    repump: &LaserField,
    b: f64,
) -> Vec<f64> {
    let b = b.max(0.0);
    let delta_1092 = repump.detuning / TWO_PI * 1e-6;
    let mut out = Vec::new();
    for two_ms in scheme.levels[S12].two_m() {
        for two_md in scheme.levels[D32].two_m() {
            let linked = scheme.levels[P12].two_m().any(|mp| {
                cooling.polarization.component(mp - two_ms).norm() > 0.0
                    && repump.polarization.component(mp - two_md).norm() > 0.0
            });
            if linked {
                out.push(delta_1092 + raman_offset_mhz(scheme, two_ms, two_md, b));
            }
        }
    }
    sorted_unique(out)
}
