//! Axial-mode experiments on the 674 nm line: carrier thermometry, sideband
//! spectra, the cooling protocol and heating-rate scans.

use super::{measure, signal_table, Axis, Experiment, Outputs, PlotDescriptor, RunContext, RunError};
use crate::config::{ExperimentKind, ScanSpec};
use crate::constants::TWO_PI;
use crate::motion_qubit::{carrier_rabi_signal, heating_scan, sideband_cool, sideband_spectrum, SidebandDrive, ThermalState};
use crate::signal::CsvTable;

fn drive(eta: f64, rabi_khz: f64, order: i32, duration: f64) -> SidebandDrive {
    SidebandDrive {
        eta,
        omega0: TWO_PI * rabi_khz * 1e3,
        order,
        duration,
        detuning: 0.0,
    }
}

fn probability_plot(title: &str, x_label: &str, x_unit: &str) -> PlotDescriptor {
    PlotDescriptor::new(
        "points",
        title,
        Axis::new("x_value", x_label, x_unit),
        vec![Axis::new("probability", "D5/2 population", "1").with_error("std_err")],
    )
}

pub struct RabiThermal;

impl Experiment for RabiThermal {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::RabiThermal
    }

    fn description(&self) -> &'static str {
        "carrier Rabi flops of a thermal state against pulse length (us scan)"
    }

    fn default_scan(&self) -> Option<ScanSpec> {
        Some(ScanSpec::linear(0.0, 50.0, 201))
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let cfg = &ctx.config.rabi_thermal;
        let t_us = ctx.scan(self.default_scan().unwrap());
        let t: Vec<f64> = t_us.iter().map(|v| v * 1e-6).collect();
        let d = SidebandDrive {
            detuning: TWO_PI * cfg.detuning_khz * 1e3,
            ..drive(cfg.eta, cfg.carrier_rabi_khz, 0, 0.0)
        };
        let curve = carrier_rabi_signal(&ThermalState::new(cfg.nbar), &d, &t).map_err(|e| RunError::model(self.kind(), e))?;
        let (y, err) = measure(&curve.y, cfg.shots, ctx.config.seed, 0);
        let mut out = Outputs::default();
        out.plotted_csv(
            "rabi_thermal",
            &signal_table("us", &t_us, &y, &err),
            probability_plot("carrier Rabi flops", "pulse length", "us"),
        );
        Ok(out)
    }
}

pub struct Sidebands;

impl Experiment for Sidebands {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Sidebands
    }

    fn description(&self) -> &'static str {
        "red and blue sideband spectrum against 674 nm detuning (kHz scan)"
    }

    fn default_scan(&self) -> Option<ScanSpec> {
        Some(ScanSpec::linear(-1040.0, 1040.0, 1041))
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let cfg = &ctx.config.sidebands;
        let det_khz = ctx.scan(self.default_scan().unwrap());
        let det: Vec<f64> = det_khz.iter().map(|v| TWO_PI * v * 1e3).collect();
        let d = drive(cfg.eta, cfg.carrier_rabi_khz, 1, cfg.duration_us * 1e-6);
        let curve = sideband_spectrum(
            &ThermalState::new(cfg.nbar),
            &d,
            TWO_PI * cfg.axial_frequency_mhz * 1e6,
            &det,
            cfg.carrier_offset,
        )
        .map_err(|e| RunError::model(self.kind(), e))?;
        let (y, err) = measure(&curve.y, cfg.shots, ctx.config.seed, 0);
        let mut out = Outputs::default();
        out.plotted_csv(
            "sidebands",
            &signal_table("kHz", &det_khz, &y, &err),
            probability_plot("sideband spectrum", "674 nm detuning", "kHz"),
        );
        Ok(out)
    }
}

pub struct Cooling;

impl Experiment for Cooling {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Cooling
    }

    fn description(&self) -> &'static str {
        "continuous plus pulsed sideband cooling from a thermal state"
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let cfg = &ctx.config.cooling;
        let result = sideband_cool(&ThermalState::new(cfg.initial_nbar), &cfg.protocol())
            .map_err(|e| RunError::model(self.kind(), e))?;

        let mut stages = CsvTable::new(&["stage", "label", "nbar"], &["-", "-", "1"]);
        for (k, (label, nbar)) in result.stages.iter().enumerate() {
            stages.push(vec![k.to_string(), label.clone(), crate::signal::format_float(*nbar)]);
        }
        let mut dist = CsvTable::new(&["n", "probability"], &["1", "1"]);
        for (n, p) in result.distribution.iter().enumerate() {
            dist.push_numeric(&[n as f64, *p]);
        }
        let mut out = Outputs::default();
        out.plotted_csv(
            "cooling",
            &stages,
            PlotDescriptor::new(
                "points",
                "mean occupation per cooling stage",
                Axis::new("stage", "stage", "-"),
                vec![Axis::new("nbar", "mean occupation", "1").log(true)],
            ),
        );
        out.plotted_csv(
            "cooling_distribution",
            &dist,
            PlotDescriptor::new(
                "bar",
                "final Fock distribution",
                Axis::new("n", "Fock state", "1"),
                vec![Axis::new("probability", "population", "1").log(true)],
            ),
        );
        Ok(out)
    }
}

pub struct Heating;

impl Experiment for Heating {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Heating
    }

    fn description(&self) -> &'static str {
        "red and blue sideband excitation against heating delay (ms scan)"
    }

    fn default_scan(&self) -> Option<ScanSpec> {
        Some(ScanSpec::linear(0.0, 60.0, 13))
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let cfg = &ctx.config.heating;
        let delays_ms = ctx.scan(self.default_scan().unwrap());
        let duration = cfg.pulse_us * 1e-6;
        let (red, blue) = heating_scan(
            cfg.nbar0,
            cfg.rate_per_ms,
            &delays_ms,
            &drive(cfg.eta, cfg.carrier_rabi_khz, -1, duration),
            &drive(cfg.eta, cfg.carrier_rabi_khz, 1, duration),
            cfg.carrier_offset,
        )
        .map_err(|e| RunError::model(self.kind(), e))?;
        let (r, r_err) = measure(&red.y, cfg.shots, ctx.config.seed, 0);
        let (b, b_err) = measure(&blue.y, cfg.shots, ctx.config.seed, 1);

        let mut table = CsvTable::new(
            &["x_value", "rsb", "rsb_std_err", "bsb", "bsb_std_err"],
            &["ms", "1", "1", "1", "1"],
        )
        .comment("x: ms");
        for k in 0..delays_ms.len() {
            table.push_numeric(&[delays_ms[k], r[k], r_err[k], b[k], b_err[k]]);
        }
        let mut out = Outputs::default();
        out.plotted_csv(
            "heating",
            &table,
            PlotDescriptor::new(
                "points",
                "sideband excitation after heating delay",
                Axis::new("x_value", "delay", "ms"),
                vec![
                    Axis::new("rsb", "red sideband", "1").with_error("rsb_std_err"),
                    Axis::new("bsb", "blue sideband", "1").with_error("bsb_std_err"),
                ],
            ),
        );
        Ok(out)
    }
}
