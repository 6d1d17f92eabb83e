//! Linear Paul trap: voltages and geometry to secular frequencies, Mathieu
//! parameters, the anharmonic (Duffing) axial response, the micromotion
//! compensation scan and the heating-rate to field-noise conversion.
//!
//! Potentials follow the usual linear-trap idealisation:
//!
//! * rf quadrupole `κ_r V_rf cos(Ω t) (x² − y²) / (2 r₀²)`
//! * end-cap field `κ_z U (z² − (x² + y²)/2) / z₀²`
//! * static radial bias `κ_b V_b (x² − y²) / (2 r₀²)`
//!
//! The geometric efficiencies κ are calibration constants, see
//! [`calibrate_geometry`].

mod duffing;
mod micromotion;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{AtomicConstants, ELEMENTARY_CHARGE, HBAR, TWO_PI};

pub use duffing::{duffing_response, real_cubic_roots, DuffingOscillator, DuffingResponse};
pub use micromotion::{
    doppler_averaged_lineshape, micromotion_scan, micromotion_scan_both, FluorescenceProbe,
    MicromotionDrive, MicromotionMap, SweepDirection,
};

/// First-stability-region boundary of the Mathieu equation at `a = 0`.
pub const Q_STABILITY_LIMIT: f64 = 0.908;

#[derive(Debug, Error, PartialEq)]
pub enum TrapError {
    #[error("invalid trap configuration: {0}")]
    InvalidConfig(String),
    #[error("unstable trap: {0}")]
    UnstableTrap(String),
    #[error("no calibration solution: {0}")]
    NoSolution(String),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
}

/// Electrode voltages, rf drive, geometry and calibration factors (SI units,
/// angular frequencies).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub rf_amplitude: f64,
    pub rf_frequency: f64,
    pub endcap_voltage: f64,
    pub radial_bias: f64,
    pub ion_electrode_distance: f64,
    pub ion_endcap_distance: f64,
    pub kappa_radial: f64,
    pub kappa_axial: f64,
    /// Efficiency of the static radial bias that lifts the radial degeneracy.
    pub kappa_bias: f64,
    /// Coefficient of the cubic restoring force along the axis (N/m³).
    pub cubic_coefficient_alpha: f64,
    pub ion_mass: f64,
    pub ion_charge: f64,
}

impl TrapConfig {
    /// Drive and geometry of the miniature trap with unit efficiencies.
    pub fn paper_voltages() -> Self {
        let constants = AtomicConstants::default();
        Self {
            rf_amplitude: 200.0,
            rf_frequency: TWO_PI * 21e6,
            endcap_voltage: 50.0,
            radial_bias: 0.5,
            ion_electrode_distance: 0.27e-3,
            ion_endcap_distance: 0.65e-3,
            kappa_radial: 1.0,
            kappa_axial: 1.0,
            kappa_bias: 1.0,
            cubic_coefficient_alpha: TWO_PI * TWO_PI * 1.74e-7,
            ion_mass: constants.ion_mass_kg(),
            ion_charge: ELEMENTARY_CHARGE,
        }
    }

    /// The nominal voltages with efficiencies calibrated to the measured
    /// frequencies of 1.0 MHz axial and 2.5 / 2.35 MHz radial.
    pub fn paper_calibrated() -> Self {
        calibrate_geometry(&SecularFrequencies::paper_targets(), &Self::paper_voltages())
            .expect("nominal frequencies are reachable")
    }

    pub fn validate(&self) -> Result<(), TrapError> {
        let positive = [
            ("ion_electrode_distance", self.ion_electrode_distance),
            ("ion_endcap_distance", self.ion_endcap_distance),
            ("ion_mass", self.ion_mass),
            ("ion_charge", self.ion_charge),
            ("rf_frequency", self.rf_frequency),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(TrapError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("endcap_voltage", self.endcap_voltage),
            ("rf_amplitude", self.rf_amplitude),
            ("kappa_radial", self.kappa_radial),
            ("kappa_axial", self.kappa_axial),
            ("kappa_bias", self.kappa_bias),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(TrapError::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.radial_bias.is_finite() || !self.cubic_coefficient_alpha.is_finite() {
            return Err(TrapError::InvalidConfig("non-finite bias or cubic coefficient".into()));
        }
        Ok(())
    }

    fn charge_to_mass(&self) -> f64 {
        self.ion_charge / self.ion_mass
    }

    /// Squared axial frequency from the end-cap field.
    fn axial_sq(&self) -> f64 {
        2.0 * self.charge_to_mass() * self.kappa_axial * self.endcap_voltage
            / self.ion_endcap_distance.powi(2)
    }

    /// Radial pseudopotential frequency of the rf quadrupole.
    pub fn rf_pseudopotential_frequency(&self) -> f64 {
        self.charge_to_mass() * self.kappa_radial * self.rf_amplitude
            / (std::f64::consts::SQRT_2 * self.rf_frequency * self.ion_electrode_distance.powi(2))
    }

    /// Signed squared splitting term of the static radial bias.
    fn bias_sq(&self) -> f64 {
        self.charge_to_mass() * self.kappa_bias * self.radial_bias
            / self.ion_electrode_distance.powi(2)
    }
}

/// Axial and the two radial secular frequencies (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecularFrequencies {
    pub omega_ax: f64,
    pub omega_rad1: f64,
    pub omega_rad2: f64,
}

impl SecularFrequencies {
    pub fn from_mhz(ax: f64, rad1: f64, rad2: f64) -> Self {
        Self {
            omega_ax: TWO_PI * ax * 1e6,
            omega_rad1: TWO_PI * rad1 * 1e6,
            omega_rad2: TWO_PI * rad2 * 1e6,
        }
    }

    pub fn paper_targets() -> Self {
        Self::from_mhz(1.0, 2.5, 2.35)
    }

    pub fn as_mhz(&self) -> [f64; 3] {
        [self.omega_ax, self.omega_rad1, self.omega_rad2].map(|w| w / TWO_PI / 1e6)
    }
}

/// Dimensionless Mathieu parameters per axis, ordered `(x, y, z)` with `z`
/// the trap axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MathieuParams {
    pub a: [f64; 3],
    pub q: [f64; 3],
}

impl MathieuParams {
    pub fn q_radial(&self) -> f64 {
        self.q[0].abs()
    }
}

pub fn secular_frequencies(cfg: &TrapConfig) -> Result<SecularFrequencies, TrapError> {
    cfg.validate()?;
    let params = mathieu_params(cfg)?;
    if params.q_radial() >= Q_STABILITY_LIMIT {
        return Err(TrapError::UnstableTrap(format!(
            "q = {:.4} outside the first stability region",
            params.q_radial()
        )));
    }
    let ax_sq = cfg.axial_sq();
    let ps_sq = cfg.rf_pseudopotential_frequency().powi(2);
    let bias_sq = cfg.bias_sq();
    let rad1_sq = ps_sq + bias_sq - ax_sq / 2.0;
    let rad2_sq = ps_sq - bias_sq - ax_sq / 2.0;
    for (name, sq) in [("axial", ax_sq), ("radial 1", rad1_sq), ("radial 2", rad2_sq)] {
        if !(sq > 0.0) {
            return Err(TrapError::UnstableTrap(format!(
                "{name} squared frequency {sq:.3e} is not positive"
            )));
        }
    }
    Ok(SecularFrequencies {
        omega_ax: ax_sq.sqrt(),
        omega_rad1: rad1_sq.sqrt(),
        omega_rad2: rad2_sq.sqrt(),
    })
}

pub fn mathieu_params(cfg: &TrapConfig) -> Result<MathieuParams, TrapError> {
    cfg.validate()?;
    let scale = 4.0 / cfg.rf_frequency.powi(2);
    let ax_sq = cfg.axial_sq();
    let bias_sq = cfg.bias_sq();
    let q = 2.0 * std::f64::consts::SQRT_2 * cfg.rf_pseudopotential_frequency() / cfg.rf_frequency;
    let a_z = scale * ax_sq;
    let a_x = scale * (bias_sq - ax_sq / 2.0);
    let a_y = scale * (-bias_sq - ax_sq / 2.0);
    Ok(MathieuParams {
        a: [a_x, a_y, a_z],
        q: [q, -q, 0.0],
    })
}

/// Inverts [`secular_frequencies`]: returns `cfg` with `kappa_radial`,
/// `kappa_axial` and `kappa_bias` chosen so the voltages in `cfg` produce
/// `targets`.
pub fn calibrate_geometry(
    targets: &SecularFrequencies,
    cfg: &TrapConfig,
) -> Result<TrapConfig, TrapError> {
    cfg.validate()?;
    let SecularFrequencies {
        omega_ax,
        omega_rad1,
        omega_rad2,
    } = *targets;
    if ![omega_ax, omega_rad1, omega_rad2]
        .iter()
        .all(|w| w.is_finite() && *w > 0.0)
    {
        return Err(TrapError::NoSolution("targets must all be positive".into()));
    }
    let qm = cfg.charge_to_mass();
    let r0_sq = cfg.ion_electrode_distance.powi(2);
    let z0_sq = cfg.ion_endcap_distance.powi(2);

    if cfg.endcap_voltage <= 0.0 {
        return Err(TrapError::NoSolution(
            "axial confinement needs a positive end-cap voltage".into(),
        ));
    }
    let kappa_axial = omega_ax.powi(2) * z0_sq / (2.0 * qm * cfg.endcap_voltage);

    // The static potential is traceless, so the end-cap field removes
    // ω_ax²/2 from each radial direction and the rf must supply the rest.
    let ps_sq = 0.5 * (omega_rad1.powi(2) + omega_rad2.powi(2)) + 0.5 * omega_ax.powi(2);
    let split_sq = 0.5 * (omega_rad1.powi(2) - omega_rad2.powi(2));
    if cfg.rf_amplitude <= 0.0 {
        return Err(TrapError::NoSolution("radial confinement needs rf".into()));
    }
    let kappa_radial = ps_sq.sqrt() * std::f64::consts::SQRT_2 * cfg.rf_frequency * r0_sq
        / (qm * cfg.rf_amplitude);

    let kappa_bias = if split_sq == 0.0 {
        0.0
    } else if cfg.radial_bias == 0.0 {
        return Err(TrapError::NoSolution(
            "radial splitting requested but radial bias is 0 V".into(),
        ));
    } else {
        split_sq * r0_sq / (qm * cfg.radial_bias)
    };
    if kappa_bias < 0.0 {
        return Err(TrapError::NoSolution(
            "sign of the requested radial splitting is opposite to the bias voltage".into(),
        ));
    }

    let out = TrapConfig {
        kappa_radial,
        kappa_axial,
        kappa_bias,
        ..cfg.clone()
    };
    let q = mathieu_params(&out)?.q_radial();
    if q >= Q_STABILITY_LIMIT {
        return Err(TrapError::NoSolution(format!(
            "required q = {q:.3} is outside the stability region"
        )));
    }
    Ok(out)
}

/// Characteristic exponent β of `ü + (a − 2q cos 2τ) u = 0` from the
/// monodromy matrix over one period. Returns `None` outside the stable
/// regions. For the first stability region the secular frequency is
/// `β Ω / 2`.
pub fn mathieu_characteristic_exponent(a: f64, q: f64) -> Option<f64> {
    const STEPS: usize = 4000;
    let h = std::f64::consts::PI / STEPS as f64;
    let accel = |tau: f64, u: f64| -(a - 2.0 * q * (2.0 * tau).cos()) * u;
    let mut trace = 0.0;
    for (u0, v0, pick_u) in [(1.0, 0.0, true), (0.0, 1.0, false)] {
        let (mut u, mut v) = (u0, v0);
        for i in 0..STEPS {
            let t = i as f64 * h;
            let k1u = v;
            let k1v = accel(t, u);
            let k2u = v + 0.5 * h * k1v;
            let k2v = accel(t + 0.5 * h, u + 0.5 * h * k1u);
            let k3u = v + 0.5 * h * k2v;
            let k3v = accel(t + 0.5 * h, u + 0.5 * h * k2u);
            let k4u = v + h * k3v;
            let k4v = accel(t + h, u + h * k3u);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        trace += if pick_u { u } else { v };
    }
    let half = trace / 2.0;
    (half.abs() < 1.0).then(|| half.acos() / std::f64::consts::PI)
}

/// Radial secular frequencies from the exact Mathieu exponents instead of
/// the pseudopotential approximation.
pub fn floquet_radial_frequencies(cfg: &TrapConfig) -> Result<[f64; 2], TrapError> {
    let p = mathieu_params(cfg)?;
    let mut out = [0.0; 2];
    for (axis, w) in out.iter_mut().enumerate() {
        let beta = mathieu_characteristic_exponent(p.a[axis], p.q[axis]).ok_or_else(|| {
            TrapError::UnstableTrap(format!("radial axis {axis} has no stable Floquet solution"))
        })?;
        *w = beta * cfg.rf_frequency / 2.0;
    }
    Ok(out)
}

/// Electric-field noise inferred from a motional heating rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldNoise {
    /// Spectral density S_E ((V/m)²/Hz).
    pub s_e: f64,
    /// ω·S_E ((V/m)²).
    pub omega_s_e: f64,
}

/// `S_E = 4 m ħ ω n̄̇ / e²`.
pub fn field_noise_from_heating(heating_rate: f64, omega_ax: f64, cfg: &TrapConfig) -> FieldNoise {
    let s_e = 4.0 * cfg.ion_mass * HBAR * omega_ax * heating_rate / cfg.ion_charge.powi(2);
    FieldNoise {
        s_e,
        omega_s_e: omega_ax * s_e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn calibrated_paper_frequencies() {
        let cfg = TrapConfig::paper_calibrated();
        let f = secular_frequencies(&cfg).unwrap().as_mhz();
        assert_relative_eq!(f[0], 1.0, max_relative = 1e-9);
        assert_relative_eq!(f[1], 2.5, max_relative = 1e-9);
        assert_relative_eq!(f[2], 2.35, max_relative = 1e-9);
    }

    #[test]
    fn endcap_voltage_scaling() {
        let cfg = TrapConfig::paper_calibrated();
        let hi = TrapConfig {
            endcap_voltage: 200.0,
            ..cfg.clone()
        };
        let f = secular_frequencies(&hi).unwrap().as_mhz();
        assert_relative_eq!(f[0], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn kappa_axial_scaling() {
        let cfg = TrapConfig::paper_calibrated();
        let w0 = secular_frequencies(&cfg).unwrap().omega_ax;
        let bumped = TrapConfig {
            kappa_axial: cfg.kappa_axial * 1.21,
            ..cfg
        };
        // ω_ax ∝ √κ_axial evaluated directly from the closed form
        let direct = (2.0 * bumped.ion_charge * bumped.kappa_axial * bumped.endcap_voltage
            / (bumped.ion_mass * bumped.ion_endcap_distance.powi(2)))
        .sqrt();
        let w1 = secular_frequencies(&bumped).unwrap().omega_ax;
        assert_relative_eq!(w1, direct, max_relative = 1e-12);
        assert_relative_eq!(w1 / w0, 1.1, max_relative = 1e-12);
    }

    #[test]
    fn calibration_fixed_point() {
        let cfg = TrapConfig::paper_calibrated();
        let targets = secular_frequencies(&cfg).unwrap();
        let again = calibrate_geometry(&targets, &cfg).unwrap();
        assert_relative_eq!(again.kappa_radial, cfg.kappa_radial, max_relative = 1e-12);
        assert_relative_eq!(again.kappa_axial, cfg.kappa_axial, max_relative = 1e-12);
        assert_relative_eq!(again.kappa_bias, cfg.kappa_bias, max_relative = 1e-12);
    }

    #[test]
    fn calibration_rejects_zero_bias_with_splitting() {
        let cfg = TrapConfig {
            radial_bias: 0.0,
            ..TrapConfig::paper_voltages()
        };
        assert!(matches!(
            calibrate_geometry(&SecularFrequencies::paper_targets(), &cfg),
            Err(TrapError::NoSolution(_))
        ));
    }

    #[test]
    fn q_at_operating_point() {
        let cfg = TrapConfig::paper_calibrated();
        let p = mathieu_params(&cfg).unwrap();
        // independent route: q = 2√2 ω_ps / Ω with ω_ps² = (ω₁² + ω₂²)/2 + ω_ax²/2
        let ps = ((2.5f64.powi(2) + 2.35f64.powi(2)) / 2.0 + 0.5).sqrt();
        let expected = 2.0 * std::f64::consts::SQRT_2 * ps / 21.0;
        assert_relative_eq!(p.q_radial(), expected, max_relative = 1e-9);
        assert!((p.q_radial() - 0.34).abs() < 0.005);
        assert!(p.a.iter().sum::<f64>().abs() < 1e-12);
        assert_eq!(p.q[2], 0.0);
    }

    #[test]
    fn zero_voltages_give_zero_params() {
        let cfg = TrapConfig::paper_calibrated();
        let no_rf = TrapConfig {
            rf_amplitude: 0.0,
            ..cfg.clone()
        };
        assert_eq!(mathieu_params(&no_rf).unwrap().q, [0.0, 0.0, 0.0]);
        let no_static = TrapConfig {
            endcap_voltage: 0.0,
            radial_bias: 0.0,
            ..cfg
        };
        assert!(mathieu_params(&no_static).unwrap().a.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn unstable_when_q_too_large() {
        let cfg = TrapConfig {
            rf_amplitude: 200.0 * 3.0,
            ..TrapConfig::paper_calibrated()
        };
        assert!(matches!(
            secular_frequencies(&cfg),
            Err(TrapError::UnstableTrap(_))
        ));
    }

    #[test]
    fn unstable_without_endcap() {
        let cfg = TrapConfig {
            endcap_voltage: 0.0,
            ..TrapConfig::paper_calibrated()
        };
        assert!(matches!(
            secular_frequencies(&cfg),
            Err(TrapError::UnstableTrap(_))
        ));
    }

    #[test]
    fn mathieu_exponent_small_q_limit() {
        // β ≈ √(a + q²/2) for small a and q
        let beta = mathieu_characteristic_exponent(0.0, 0.1).unwrap();
        assert_relative_eq!(beta, 0.1 / 2f64.sqrt(), max_relative = 2e-3);
        assert!(mathieu_characteristic_exponent(0.0, 0.95).is_none());
        assert!(mathieu_characteristic_exponent(0.0, 0.9).is_some());
    }

    #[test]
    fn pseudopotential_consistent_with_q() {
        let cfg = TrapConfig::paper_calibrated();
        let q = mathieu_params(&cfg).unwrap().q_radial();
        let from_q = q * cfg.rf_frequency / (2.0 * std::f64::consts::SQRT_2);
        assert_relative_eq!(from_q, cfg.rf_pseudopotential_frequency(), max_relative = 0.02);
    }

    #[test]
    fn floquet_close_to_pseudopotential() {
        // the lowest-order pseudopotential underestimates β by ~q²/16 at q ≈ 0.34
        let cfg = TrapConfig::paper_calibrated();
        let s = secular_frequencies(&cfg).unwrap();
        let f = floquet_radial_frequencies(&cfg).unwrap();
        assert_relative_eq!(f[0], s.omega_rad1, max_relative = 0.03);
        assert_relative_eq!(f[1], s.omega_rad2, max_relative = 0.03);
        assert!(f[0] > s.omega_rad1 && f[1] > s.omega_rad2);
    }

    #[test]
    fn field_noise_numbers() {
        let cfg = TrapConfig::paper_calibrated();
        let w = TWO_PI * 1e6;
        let n = field_noise_from_heating(16.0, w, &cfg);
        // 4 m ħ ω n̄̇ / e² by hand
        let m = 87.9056125 * 1.660_539_066_60e-27 - 9.109_383_701_5e-31;
        let by_hand = 4.0 * m * 1.054_571_817e-34 * w * 16.0 / (1.602_176_634e-19f64).powi(2);
        assert_relative_eq!(n.s_e, by_hand, max_relative = 1e-12);
        assert!((n.omega_s_e - 1.515e-6).abs() < 0.01e-6);
        assert_eq!(field_noise_from_heating(0.0, w, &cfg).s_e, 0.0);
        let doubled = field_noise_from_heating(16.0, 2.0 * w, &cfg);
        assert_relative_eq!(doubled.s_e, 2.0 * n.s_e, max_relative = 1e-14);
        assert_relative_eq!(doubled.omega_s_e, 4.0 * n.omega_s_e, max_relative = 1e-14);
    }
}
