//! Run configuration: a sectioned TOML file whose keys carry their units
//! (`endcap_voltage_V = 50`). Every key is optional; missing values come
//! from the `paper_defaults` preset. The parsed [`RunConfig`] keeps the
//! human units of the file so it serialises back losslessly; the accessor
//! methods convert to SI with angular frequencies.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::atom_optics::{DetectionModel, LaserField, Polarization};
use crate::constants::{AtomicConstants, ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE, TWO_PI};
use crate::motion_qubit::noise::white_density_for_t2;
use crate::motion_qubit::{CoolingProtocol, LineHarmonic, MagneticNoiseModel, PhasePolicy};
use crate::signal::{linspace, logspace};
use crate::trap_model::{FluorescenceProbe, MicromotionDrive, TrapConfig};

pub const PAPER_DEFAULTS: &str = "paper_defaults";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing section or key: {0}")]
    MissingSection(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("unknown preset `{0}` (available: paper_defaults)")]
    UnknownPreset(String),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    Micromotion,
    RabiThermal,
    Sidebands,
    Cooling,
    Heating,
    QubitRabi,
    Ramsey,
    Fit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::Spectrum,
        Self::Micromotion,
        Self::RabiThermal,
        Self::Sidebands,
        Self::Cooling,
        Self::Heating,
        Self::QubitRabi,
        Self::Ramsey,
        Self::Fit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Micromotion => "micromotion",
            Self::RabiThermal => "rabi-thermal",
            Self::Sidebands => "sidebands",
            Self::Cooling => "cooling",
            Self::Heating => "heating",
            Self::QubitRabi => "qubit-rabi",
            Self::Ramsey => "ramsey",
            Self::Fit => "fit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if s.trim().is_empty() {
            return Err(ConfigError::MissingSection("experiment".into()));
        }
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// One-dimensional scan grid in the x unit of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl ScanSpec {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            log: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(ConfigError::Invalid("scan needs finite end points and points >= 1".into()));
        }
        if self.log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(ConfigError::Invalid("log scan needs positive end points".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.log {
            logspace(self.start, self.stop, self.points)
        } else {
            linspace(self.start, self.stop, self.points)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    #[serde(rename = "rf_amplitude_V")]
    pub rf_amplitude_v: f64,
    #[serde(rename = "rf_frequency_MHz")]
    pub rf_frequency_mhz: f64,
    #[serde(rename = "endcap_voltage_V")]
    pub endcap_voltage_v: f64,
    #[serde(rename = "radial_bias_V")]
    pub radial_bias_v: f64,
    pub ion_electrode_distance_mm: f64,
    pub ion_endcap_distance_mm: f64,
    pub kappa_radial: f64,
    pub kappa_axial: f64,
    pub kappa_bias: f64,
    /// Cubic coefficient over (2π)², in kg Hz²/m².
    #[serde(rename = "cubic_alpha_kg_Hz2_per_m2")]
    pub cubic_alpha: f64,
    pub ion_mass_u: f64,
    pub ion_charge_e: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        let t = TrapConfig::paper_calibrated();
        Self {
            rf_amplitude_v: t.rf_amplitude,
            rf_frequency_mhz: 21.0,
            endcap_voltage_v: t.endcap_voltage,
            radial_bias_v: t.radial_bias,
            ion_electrode_distance_mm: 0.27,
            ion_endcap_distance_mm: 0.65,
            kappa_radial: t.kappa_radial,
            kappa_axial: t.kappa_axial,
            kappa_bias: t.kappa_bias,
            cubic_alpha: 1.74e-7,
            ion_mass_u: t.ion_mass / ATOMIC_MASS_UNIT,
            ion_charge_e: 1.0,
        }
    }
}

impl TrapSection {
    pub fn to_trap_config(&self) -> TrapConfig {
        TrapConfig {
            rf_amplitude: self.rf_amplitude_v,
            rf_frequency: TWO_PI * (self.rf_frequency_mhz * 1e6),
            endcap_voltage: self.endcap_voltage_v,
            radial_bias: self.radial_bias_v,
            ion_electrode_distance: self.ion_electrode_distance_mm * 1e-3,
            ion_endcap_distance: self.ion_endcap_distance_mm * 1e-3,
            kappa_radial: self.kappa_radial,
            kappa_axial: self.kappa_axial,
            kappa_bias: self.kappa_bias,
            cubic_coefficient_alpha: TWO_PI * TWO_PI * self.cubic_alpha,
            ion_mass: self.ion_mass_u * ATOMIC_MASS_UNIT,
            ion_charge: self.ion_charge_e * ELEMENTARY_CHARGE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    /// "422" (S1/2 to P1/2) or "1092" (D3/2 to P1/2).
    pub line: String,
    #[serde(rename = "detuning_MHz", default)]
    pub detuning_mhz: f64,
    #[serde(default = "unit")]
    pub saturation: f64,
    /// pi, sigma_plus, sigma_minus or perpendicular.
    #[serde(default = "default_polarization")]
    pub polarization: String,
    #[serde(rename = "linewidth_MHz", default)]
    pub linewidth_mhz: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_polarization() -> String {
    "pi".into()
}

impl LaserSection {
    pub fn to_field(&self) -> Result<LaserField, ConfigError> {
        let pol = Polarization::by_name(&self.polarization)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown polarization `{}`", self.polarization)))?;
        match self.line.as_str() {
            "422" => Ok(LaserField::cooling_422(self.detuning_mhz, self.saturation, pol, self.linewidth_mhz)),
            "1092" => Ok(LaserField::repump_1092(self.detuning_mhz, self.saturation, pol, self.linewidth_mhz)),
            other => Err(ConfigError::Invalid(format!("unknown laser line `{other}` (422 or 1092)"))),
        }
    }
}

/// Dark-resonance lasers of the Doppler-cooling spectrum.
fn default_lasers() -> Vec<LaserSection> {
    vec![
        LaserSection {
            line: "422".into(),
            detuning_mhz: -10.0,
            saturation: 0.6,
            polarization: "pi".into(),
            linewidth_mhz: 0.5,
        },
        LaserSection {
            line: "1092".into(),
            detuning_mhz: -14.0,
            saturation: 7.0,
            polarization: "perpendicular".into(),
            linewidth_mhz: 0.5,
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(rename = "magnetic_field_G")]
    pub magnetic_field_g: f64,
    pub detection_efficiency: f64,
    pub background_per_ms: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let d = DetectionModel::paper();
        Self {
            magnetic_field_g: 1.18,
            detection_efficiency: d.detection_efficiency,
            background_per_ms: d.dark_rate * 1e-3,
        }
    }
}

impl SpectrumSection {
    /// Detection over a 1 ms window, so counts read as counts per ms.
    pub fn detection(&self) -> DetectionModel {
        DetectionModel {
            dark_rate: self.background_per_ms * 1e3,
            detection_time: 1e-3,
            detection_efficiency: self.detection_efficiency,
            ..DetectionModel::paper()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicromotionSection {
    #[serde(rename = "v_opt_V")]
    pub v_opt_v: f64,
    #[serde(rename = "damping_kHz")]
    pub damping_khz: f64,
    #[serde(rename = "frequency_slope_kHz_per_V")]
    pub frequency_slope_khz_per_v: f64,
    #[serde(rename = "mixing_N_per_V")]
    pub mixing_n_per_v: f64,
    #[serde(rename = "v_start_V")]
    pub v_start_v: f64,
    #[serde(rename = "v_stop_V")]
    pub v_stop_v: f64,
    pub v_points: usize,
    pub probe_saturation: f64,
    pub rest_counts_per_ms: f64,
    pub background_per_ms: f64,
}

impl Default for MicromotionSection {
    fn default() -> Self {
        let d = MicromotionDrive::default();
        let p = FluorescenceProbe::default();
        Self {
            v_opt_v: d.v_opt,
            damping_khz: d.damping / TWO_PI / 1e3,
            frequency_slope_khz_per_v: d.frequency_slope / TWO_PI / 1e3,
            mixing_n_per_v: d.mixing,
            v_start_v: -0.5,
            v_stop_v: 0.3,
            v_points: 41,
            probe_saturation: p.saturation,
            rest_counts_per_ms: p.rest_counts_per_ms,
            background_per_ms: p.background_per_ms,
        }
    }
}

impl MicromotionSection {
    pub fn drive(&self) -> MicromotionDrive {
        MicromotionDrive {
            v_opt: self.v_opt_v,
            damping: TWO_PI * self.damping_khz * 1e3,
            frequency_slope: TWO_PI * self.frequency_slope_khz_per_v * 1e3,
            mixing: self.mixing_n_per_v,
        }
    }

    pub fn probe(&self) -> FluorescenceProbe {
        FluorescenceProbe {
            saturation: self.probe_saturation,
            rest_counts_per_ms: self.rest_counts_per_ms,
            background_per_ms: self.background_per_ms,
            ..FluorescenceProbe::default()
        }
    }

    pub fn v_grid(&self) -> Vec<f64> {
        linspace(self.v_start_v, self.v_stop_v, self.v_points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RabiThermalSection {
    pub nbar: f64,
    pub eta: f64,
    #[serde(rename = "carrier_rabi_kHz")]
    pub carrier_rabi_khz: f64,
    #[serde(rename = "detuning_kHz")]
    pub detuning_khz: f64,
    /// Projective measurements per point; 0 writes exact probabilities.
    pub shots: usize,
}

impl Default for RabiThermalSection {
    fn default() -> Self {
        Self {
            nbar: 12.0,
            eta: 0.05,
            carrier_rabi_khz: 180.0,
            detuning_khz: 0.0,
            shots: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SidebandsSection {
    pub nbar: f64,
    pub eta: f64,
    #[serde(rename = "carrier_rabi_kHz")]
    pub carrier_rabi_khz: f64,
    pub duration_us: f64,
    #[serde(rename = "axial_frequency_MHz")]
    pub axial_frequency_mhz: f64,
    pub carrier_offset: f64,
    pub shots: usize,
}

impl Default for SidebandsSection {
    fn default() -> Self {
        Self {
            nbar: 0.05,
            eta: 0.05,
            carrier_rabi_khz: 100.0,
            duration_us: 100.0,
            axial_frequency_mhz: 1.0,
            carrier_offset: 0.0,
            shots: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoolingSection {
    pub initial_nbar: f64,
    pub continuous_duration_ms: f64,
    pub quench_rate_per_s: f64,
    pub pulsed_transfers: usize,
    pub eta: f64,
    #[serde(rename = "carrier_rabi_kHz")]
    pub carrier_rabi_khz: f64,
    #[serde(rename = "axial_frequency_MHz")]
    pub axial_frequency_mhz: f64,
    pub heating_rate_per_s: f64,
    pub recoil_eta: f64,
    pub heating_terms: bool,
    pub cutoff_headroom: usize,
}

impl Default for CoolingSection {
    fn default() -> Self {
        let p = CoolingProtocol::default();
        Self {
            initial_nbar: 12.0,
            continuous_duration_ms: p.continuous_duration * 1e3,
            quench_rate_per_s: p.quench_rate,
            pulsed_transfers: p.pulsed_transfers,
            eta: p.eta,
            carrier_rabi_khz: p.carrier_rabi / TWO_PI / 1e3,
            axial_frequency_mhz: p.axial_frequency / TWO_PI / 1e6,
            heating_rate_per_s: p.heating_rate,
            recoil_eta: p.recoil_eta,
            heating_terms: p.heating_terms,
            cutoff_headroom: p.cutoff_headroom,
        }
    }
}

impl CoolingSection {
    pub fn protocol(&self) -> CoolingProtocol {
        CoolingProtocol {
            continuous_duration: self.continuous_duration_ms * 1e-3,
            quench_rate: self.quench_rate_per_s,
            pulsed_transfers: self.pulsed_transfers,
            eta: self.eta,
            carrier_rabi: TWO_PI * self.carrier_rabi_khz * 1e3,
            axial_frequency: TWO_PI * self.axial_frequency_mhz * 1e6,
            heating_rate: self.heating_rate_per_s,
            recoil_eta: self.recoil_eta,
            heating_terms: self.heating_terms,
            cutoff_headroom: self.cutoff_headroom,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatingSection {
    pub rate_per_ms: f64,
    pub nbar0: f64,
    pub eta: f64,
    #[serde(rename = "carrier_rabi_kHz")]
    pub carrier_rabi_khz: f64,
    pub pulse_us: f64,
    pub carrier_offset: f64,
    pub shots: usize,
}

impl Default for HeatingSection {
    fn default() -> Self {
        Self {
            rate_per_ms: 0.016,
            nbar0: 0.05,
            eta: 0.05,
            carrier_rabi_khz: 100.0,
            pulse_us: 100.0,
            carrier_offset: 0.02,
            shots: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitRabiSection {
    #[serde(rename = "rabi_kHz")]
    pub rabi_khz: f64,
    #[serde(rename = "detuning_kHz")]
    pub detuning_khz: f64,
    /// Envelope decay time; `inf` for none.
    pub decay_us: f64,
    pub shots: usize,
}

impl Default for QubitRabiSection {
    fn default() -> Self {
        Self {
            rabi_khz: 50.0,
            detuning_khz: 0.0,
            decay_us: f64::INFINITY,
            shots: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseySection {
    #[serde(rename = "detuning_kHz")]
    pub detuning_khz: f64,
    pub shots_per_point: usize,
}

impl Default for RamseySection {
    fn default() -> Self {
        Self {
            detuning_khz: 2.0,
            shots_per_point: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSection {
    #[serde(rename = "frequency_Hz")]
    pub frequency_hz: f64,
    #[serde(rename = "amplitude_uG")]
    pub amplitude_ug: f64,
    /// Free-running phase per shot instead of line triggering.
    #[serde(default)]
    pub random_phase: bool,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub line_harmonics: Vec<HarmonicSection>,
    #[serde(rename = "slow_drift_amplitude_uG")]
    pub slow_drift_amplitude_ug: f64,
    #[serde(rename = "slow_drift_bandwidth_Hz")]
    pub slow_drift_bandwidth_hz: f64,
    #[serde(rename = "white_noise_density_G_per_rtHz")]
    pub white_noise_density: f64,
    pub shot_interval_ms: f64,
    #[serde(rename = "zeeman_slope_MHz_per_G")]
    pub zeeman_slope_mhz_per_g: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let slope = AtomicConstants::default().qubit_zeeman_slope_mhz_per_g;
        let lab = MagneticNoiseModel::lab_default(0);
        Self {
            line_harmonics: lab
                .line_harmonics
                .iter()
                .map(|h| HarmonicSection {
                    frequency_hz: h.frequency,
                    amplitude_ug: h.amplitude * 1e6,
                    random_phase: matches!(h.phase, PhasePolicy::Random),
                    phase_rad: match h.phase {
                        PhasePolicy::Fixed { phase } => phase,
                        PhasePolicy::Random => 0.0,
                    },
                })
                .collect(),
            slow_drift_amplitude_ug: 0.0,
            slow_drift_bandwidth_hz: 0.0,
            white_noise_density: white_density_for_t2(2.5e-3, slope * 1e6),
            shot_interval_ms: lab.shot_interval * 1e3,
            zeeman_slope_mhz_per_g: slope,
        }
    }
}

impl NoiseSection {
    pub fn model(&self, seed: u64) -> MagneticNoiseModel {
        MagneticNoiseModel {
            line_harmonics: self
                .line_harmonics
                .iter()
                .map(|h| LineHarmonic {
                    frequency: h.frequency_hz,
                    amplitude: h.amplitude_ug * 1e-6,
                    phase: if h.random_phase {
                        PhasePolicy::Random
                    } else {
                        PhasePolicy::Fixed { phase: h.phase_rad }
                    },
                })
                .collect(),
            slow_drift_amplitude: self.slow_drift_amplitude_ug * 1e-6,
            slow_drift_bandwidth: self.slow_drift_bandwidth_hz,
            white_noise_density: self.white_noise_density,
            seed,
            shot_interval: self.shot_interval_ms * 1e-3,
            zeeman_slope: self.zeeman_slope_mhz_per_g * 1e6,
        }
    }
}

/// Fit of a registered model to a data file written by an experiment (or
/// any CSV with the same columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub model: String,
    pub data_file: String,
    /// Weight points by 1/std_err² when the file has error columns.
    #[serde(default = "yes")]
    pub weighted: bool,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub init: BTreeMap<String, f64>,
    /// `[lo, hi]` per parameter; `lo == hi` fixes it.
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub settings: BTreeMap<String, f64>,
    /// Candidate starting values per parameter for a grid search before
    /// the local fit.
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<f64>>,
}

fn yes() -> bool {
    true
}

fn default_max_iterations() -> usize {
    500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub trap: TrapSection,
    #[serde(default = "default_lasers")]
    pub lasers: Vec<LaserSection>,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub micromotion: MicromotionSection,
    #[serde(default)]
    pub rabi_thermal: RabiThermalSection,
    #[serde(default)]
    pub sidebands: SidebandsSection,
    #[serde(default)]
    pub cooling: CoolingSection,
    #[serde(default)]
    pub heating: HeatingSection,
    #[serde(default)]
    pub qubit_rabi: QubitRabiSection,
    #[serde(default)]
    pub ramsey: RamseySection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
}

fn default_preset() -> String {
    PAPER_DEFAULTS.into()
}

fn default_output_dir() -> String {
    "out".into()
}

impl RunConfig {
    /// The `paper_defaults` preset for `experiment`.
    pub fn paper_defaults(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            preset: default_preset(),
            seed: 0,
            output_dir: default_output_dir(),
            scan: None,
            trap: TrapSection::default(),
            lasers: default_lasers(),
            spectrum: SpectrumSection::default(),
            micromotion: MicromotionSection::default(),
            rabi_thermal: RabiThermalSection::default(),
            sidebands: SidebandsSection::default(),
            cooling: CoolingSection::default(),
            heating: HeatingSection::default(),
            qubit_rabi: QubitRabiSection::default(),
            ramsey: RamseySection::default(),
            noise: NoiseSection::default(),
            fit: None,
        }
    }

    pub fn trap_config(&self) -> TrapConfig {
        self.trap.to_trap_config()
    }

    pub fn laser_fields(&self) -> Result<Vec<LaserField>, ConfigError> {
        self.lasers.iter().map(LaserSection::to_field).collect()
    }

    pub fn noise_model(&self) -> MagneticNoiseModel {
        self.noise.model(self.seed)
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    /// SHA-256 over the canonical form with the output directory blanked,
    /// since it does not affect any result.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir.clear();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.preset != PAPER_DEFAULTS {
            return Err(ConfigError::UnknownPreset(self.preset.clone()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(ConfigError::Invalid(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        if let Some(scan) = &self.scan {
            scan.validate()?;
        }
        self.laser_fields()?;
        if self.experiment == ExperimentKind::Fit && self.fit.is_none() {
            return Err(ConfigError::MissingSection("fit".into()));
        }
        Ok(())
    }
}

/// Parses the run configuration text, filling omitted keys from the preset
/// and rejecting keys the format does not define.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    match table.get("experiment") {
        None => return Err(ConfigError::MissingSection("experiment".into())),
        Some(toml::Value::String(s)) => {
            s.parse::<ExperimentKind>()?;
        }
        Some(_) => return Err(ConfigError::Invalid("experiment must be a string".into())),
    }
    match table.get("preset") {
        Some(toml::Value::String(p)) if p != PAPER_DEFAULTS => return Err(ConfigError::UnknownPreset(p.clone())),
        _ => {}
    }
    let config: RunConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    config.validate()?;
    Ok(config)
}

/// Reads and parses a config file. A relative fit `data_file` is taken
/// relative to the config file.
pub fn load_config(path: impl AsRef<std::path::Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut config = parse_config(&text)?;
    // data files are named relative to the config file
    if let (Some(fit), Some(dir)) = (config.fit.as_mut(), path.parent()) {
        let data = std::path::Path::new(&fit.data_file);
        if data.is_relative() && !dir.as_os_str().is_empty() {
            fit.data_file = dir.join(data).display().to_string();
        }
    }
    Ok(config)
}

fn toml_error(text: &str, e: toml::de::Error) -> ConfigError {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    let msg = e.message().to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or_default().to_string();
        return ConfigError::UnknownKey { line, key };
    }
    ConfigError::Parse { line, msg }
}
