//! Named fit models over the simulation curves, selected at runtime.
//!
//! Two-channel models (`sideband-pair`, `heating`) fit a red and a blue
//! sideband curve jointly: the data holds the red points first, then the
//! blue points, and the `red_points` setting gives the split.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Bound, FitError, FnModel, Model};
use crate::atom_optics::{fluorescence_spectrum, DetectionModel, LaserField, LevelScheme, Polarization};
use crate::constants::{AtomicConstants, TWO_PI};
use crate::motion_qubit::{carrier_rabi_signal, qubit_rabi_signal, sideband_excitation, SidebandDrive, ThermalState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub init: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ParamSpec {
    const fn new(name: &'static str, init: f64, lo: f64, hi: f64) -> Self {
        Self { name, init, lo, hi }
    }

    pub fn bound(&self) -> Bound {
        Bound::new(self.lo, self.hi)
    }
}

/// Fixed numbers a model needs besides its fitted parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelContext {
    pub settings: BTreeMap<String, f64>,
    pub constants: AtomicConstants,
}

impl ModelContext {
    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.settings.insert(key.to_string(), value);
        self
    }
}

pub trait FitModelFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Unit of the x column the model expects.
    fn x_unit(&self) -> &'static str;
    fn params(&self) -> Vec<ParamSpec>;
    /// Accepted settings with their defaults; NaN marks a required one.
    fn settings(&self) -> Vec<(&'static str, f64)>;
    fn channels(&self) -> usize {
        1
    }
    fn make(&self, s: &BTreeMap<&'static str, f64>, constants: &AtomicConstants) -> Result<Arc<dyn Model>, FitError>;

    fn build(&self, ctx: &ModelContext) -> Result<Arc<dyn Model>, FitError> {
        let known = self.settings();
        for key in ctx.settings.keys() {
            if !known.iter().any(|(k, _)| k == key) {
                return Err(FitError::InvalidProblem(format!("model {} has no setting {key}", self.name())));
            }
        }
        let mut resolved = BTreeMap::new();
        for (k, default) in known {
            let v = ctx.settings.get(k).copied().unwrap_or(default);
            if v.is_nan() {
                return Err(FitError::InvalidProblem(format!("model {} needs setting {k}", self.name())));
            }
            resolved.insert(k, v);
        }
        self.make(&resolved, &ctx.constants)
    }
}

pub fn registry() -> Vec<Box<dyn FitModelFactory>> {
    vec![
        Box::new(Constant),
        Box::new(Linear),
        Box::new(CarrierThermal),
        Box::new(SidebandPair),
        Box::new(Heating),
        Box::new(QubitRabi),
        Box::new(Ramsey),
        Box::new(DarkSpectrum),
    ]
}

pub fn lookup(name: &str) -> Option<Box<dyn FitModelFactory>> {
    registry().into_iter().find(|f| f.name() == name)
}

fn cutoff_for(nbar_max: f64) -> usize {
    ThermalState::new(nbar_max).n_max
}

fn split(s: &BTreeMap<&'static str, f64>) -> Result<usize, FitError> {
    let r = s["red_points"];
    if !(r >= 1.0 && r.fract() == 0.0) {
        return Err(FitError::InvalidProblem("red_points must be a positive integer".into()));
    }
    Ok(r as usize)
}

struct Constant;

impl FitModelFactory for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn description(&self) -> &'static str {
        "y = c"
    }
    fn x_unit(&self) -> &'static str {
        "any"
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![ParamSpec::new("c", 0.0, f64::NEG_INFINITY, f64::INFINITY)]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn make(&self, _: &BTreeMap<&'static str, f64>, _: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        Ok(FnModel::new("constant", &["c"], |p, x| Ok(vec![p[0]; x.len()])).shared())
    }
}

struct Linear;

impl FitModelFactory for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }
    fn description(&self) -> &'static str {
        "y = slope * x + intercept"
    }
    fn x_unit(&self) -> &'static str {
        "any"
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("slope", 0.0, f64::NEG_INFINITY, f64::INFINITY),
            ParamSpec::new("intercept", 0.0, f64::NEG_INFINITY, f64::INFINITY),
        ]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn make(&self, _: &BTreeMap<&'static str, f64>, _: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        Ok(FnModel::new("linear", &["slope", "intercept"], |p, x| {
            Ok(x.iter().map(|v| p[0] * v + p[1]).collect())
        })
        .shared())
    }
}

struct CarrierThermal;

impl FitModelFactory for CarrierThermal {
    fn name(&self) -> &'static str {
        "carrier-thermal"
    }
    fn description(&self) -> &'static str {
        "thermal carrier Rabi flop vs pulse length"
    }
    fn x_unit(&self) -> &'static str {
        "us"
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("nbar", 5.0, 0.0, 25.0),
            ParamSpec::new("rabi_khz", 180.0, 1.0, 2000.0),
        ]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        vec![("eta", 0.05), ("nbar_max", 25.0)]
    }
    fn make(&self, s: &BTreeMap<&'static str, f64>, _: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        let eta = s["eta"];
        let n_max = cutoff_for(s["nbar_max"]);
        Ok(FnModel::new("carrier-thermal", &["nbar", "rabi_khz"], move |p, x| {
            let drive = SidebandDrive {
                eta,
                omega0: TWO_PI * p[1] * 1e3,
                order: 0,
                duration: 0.0,
                detuning: 0.0,
            };
            let t: Vec<f64> = x.iter().map(|v| v * 1e-6).collect();
            Ok(carrier_rabi_signal(&ThermalState::with_cutoff(p[0], n_max), &drive, &t)?.y)
        })
        .shared())
    }
}

fn sideband_pair(eta: f64, rabi_khz: f64, state: &ThermalState, t_us: f64) -> Result<(f64, f64), FitError> {
    let red = SidebandDrive {
        eta,
        omega0: TWO_PI * rabi_khz * 1e3,
        order: -1,
        duration: t_us * 1e-6,
        detuning: 0.0,
    };
    let blue = SidebandDrive { order: 1, ..red };
    Ok((
        sideband_excitation(state, &red, red.duration)?,
        sideband_excitation(state, &blue, blue.duration)?,
    ))
}

struct SidebandPair;

impl FitModelFactory for SidebandPair {
    fn name(&self) -> &'static str {
        "sideband-pair"
    }
    fn description(&self) -> &'static str {
        "red then blue sideband flops vs pulse length"
    }
    fn x_unit(&self) -> &'static str {
        "us"
    }
    fn channels(&self) -> usize {
        2
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("nbar", 0.2, 0.0, 5.0),
            ParamSpec::new("rabi_khz", 100.0, 1.0, 2000.0),
        ]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        vec![("eta", 0.05), ("nbar_max", 5.0), ("red_points", f64::NAN)]
    }
    fn make(&self, s: &BTreeMap<&'static str, f64>, _: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        let eta = s["eta"];
        let n_max = cutoff_for(s["nbar_max"]);
        let red_points = split(s)?;
        Ok(FnModel::new("sideband-pair", &["nbar", "rabi_khz"], move |p, x| {
            let state = ThermalState::with_cutoff(p[0], n_max);
            x.iter()
                .enumerate()
                .map(|(i, t)| {
                    let (r, b) = sideband_pair(eta, p[1], &state, *t)?;
                    Ok(if i < red_points { r } else { b })
                })
                .collect()
        })
        .shared())
    }
}

struct Heating;

impl FitModelFactory for Heating {
    fn name(&self) -> &'static str {
        "heating"
    }
    fn description(&self) -> &'static str {
        "red then blue sideband excitation vs heating delay, n(t) = nbar0 + rate t"
    }
    fn x_unit(&self) -> &'static str {
        "ms"
    }
    fn channels(&self) -> usize {
        2
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("rate_per_ms", 0.01, 0.0, 1.0),
            ParamSpec::new("nbar0", 0.1, 0.0, 3.0),
            ParamSpec::new("rabi_khz", 100.0, 1.0, 2000.0),
            ParamSpec::new("offset", 0.01, 0.0, 0.5),
        ]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        vec![("eta", 0.05), ("pulse_us", 100.0), ("nbar_max", 10.0), ("red_points", f64::NAN)]
    }
    fn make(&self, s: &BTreeMap<&'static str, f64>, _: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        let eta = s["eta"];
        let pulse = s["pulse_us"];
        let n_max = cutoff_for(s["nbar_max"]);
        let red_points = split(s)?;
        Ok(
            FnModel::new("heating", &["rate_per_ms", "nbar0", "rabi_khz", "offset"], move |p, x| {
                x.iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let state = ThermalState::with_cutoff(p[1] + p[0] * t, n_max);
                        let (r, b) = sideband_pair(eta, p[2], &state, pulse)?;
                        Ok((p[3] + if i < red_points { r } else { b }).min(1.0))
                    })
                    .collect()
            })
            .shared(),
        )
    }
}

struct QubitRabi;

impl FitModelFactory for QubitRabi {
    fn name(&self) -> &'static str {
        "qubit-rabi"
    }
    fn description(&self) -> &'static str {
        "damped generalised Rabi flop"
    }
    fn x_unit(&self) -> &'static str {
        "us"
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("rabi_khz", 50.0, 0.1, 5000.0),
            ParamSpec::new("detuning_khz", 0.0, -1000.0, 1000.0),
            ParamSpec::new("decay_us", 100.0, 0.1, 1e7),
        ]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn make(&self, _: &BTreeMap<&'static str, f64>, _: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        Ok(
            FnModel::new("qubit-rabi", &["rabi_khz", "detuning_khz", "decay_us"], |p, x| {
                let t: Vec<f64> = x.iter().map(|v| v * 1e-6).collect();
                Ok(qubit_rabi_signal(p[0] * 1e3, p[1] * 1e3, &t, p[2] * 1e-6)?.y)
            })
            .shared(),
        )
    }
}

struct Ramsey;

impl FitModelFactory for Ramsey {
    fn name(&self) -> &'static str {
        "ramsey"
    }
    fn description(&self) -> &'static str {
        "P = 1/2 + contrast/2 exp(-T/T2) cos(2 pi f T + phase)"
    }
    fn x_unit(&self) -> &'static str {
        "us"
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("t2_us", 1000.0, 1.0, 1e6),
            ParamSpec::new("detuning_khz", 1.0, -1000.0, 1000.0),
            ParamSpec::new("contrast", 1.0, 0.0, 1.0),
            ParamSpec::new("phase", 0.0, -std::f64::consts::PI, std::f64::consts::PI),
        ]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn make(&self, _: &BTreeMap<&'static str, f64>, _: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        Ok(
            FnModel::new("ramsey", &["t2_us", "detuning_khz", "contrast", "phase"], |p, x| {
                Ok(x.iter()
                    .map(|t| 0.5 + 0.5 * p[2] * (-t / p[0]).exp() * (TWO_PI * p[1] * 1e-3 * t + p[3]).cos())
                    .collect())
            })
            .shared(),
        )
    }
}

struct DarkSpectrum;

impl FitModelFactory for DarkSpectrum {
    fn name(&self) -> &'static str {
        "dark-spectrum"
    }
    fn description(&self) -> &'static str {
        "eight-level fluorescence counts vs 422 nm detuning (pi 422, perpendicular 1092)"
    }
    fn x_unit(&self) -> &'static str {
        "MHz"
    }
    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("delta_1092_mhz", -14.0, -100.0, 100.0),
            ParamSpec::new("s_422", 0.6, 0.01, 20.0),
            ParamSpec::new("s_1092", 7.0, 0.01, 100.0),
            ParamSpec::new("field_g", 1.18, 0.01, 20.0),
            ParamSpec::new("linewidth_mhz", 0.5, 0.0, 10.0),
        ]
    }
    fn settings(&self) -> Vec<(&'static str, f64)> {
        let d = DetectionModel::paper();
        vec![
            ("detection_efficiency", d.detection_efficiency),
            ("dark_rate", d.dark_rate),
            ("detection_time", d.detection_time),
        ]
    }
    fn make(&self, s: &BTreeMap<&'static str, f64>, constants: &AtomicConstants) -> Result<Arc<dyn Model>, FitError> {
        let detection = DetectionModel {
            detection_efficiency: s["detection_efficiency"],
            dark_rate: s["dark_rate"],
            detection_time: s["detection_time"],
            ..DetectionModel::paper()
        };
        let constants = constants.clone();
        let names = ["delta_1092_mhz", "s_422", "s_1092", "field_g", "linewidth_mhz"];
        Ok(FnModel::new("dark-spectrum", &names, move |p, x| {
            let scheme = LevelScheme::sr88(&constants, p[3]);
            let fields = [
                LaserField::cooling_422(0.0, p[1], Polarization::pi(), p[4]),
                LaserField::repump_1092(p[0], p[2], Polarization::linear_perpendicular(), p[4]),
            ];
            Ok(fluorescence_spectrum(&scheme, &fields, x, &detection)?.y)
        })
        .shared())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let names: Vec<_> = registry().iter().map(|f| f.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn unknown_and_missing_settings_rejected() {
        let f = lookup("heating").unwrap();
        assert!(f.build(&ModelContext::default()).is_err());
        assert!(f.build(&ModelContext::default().with("red_points", 3.0).with("bogus", 1.0)).is_err());
        assert!(f.build(&ModelContext::default().with("red_points", 3.0)).is_ok());
    }

    #[test]
    fn defaults_lie_within_bounds() {
        for f in registry() {
            for p in f.params() {
                assert!(p.lo <= p.init && p.init <= p.hi, "{} {}", f.name(), p.name);
            }
        }
    }
}
