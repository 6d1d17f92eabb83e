//! Zeeman qubit experiments: Rabi flops and Ramsey fringes under the
//! configured magnetic field noise.

use super::{measure, signal_table, Axis, Experiment, Outputs, PlotDescriptor, RunContext, RunError};
use crate::config::{ExperimentKind, ScanSpec};
use crate::motion_qubit::{qubit_rabi_signal, ramsey_signal};

fn qubit_plot(title: &str, x_label: &str) -> PlotDescriptor {
    PlotDescriptor::new(
        "points",
        title,
        Axis::new("x_value", x_label, "us"),
        vec![Axis::new("probability", "spin-up population", "1").with_error("std_err")],
    )
}

pub struct QubitRabi;

impl Experiment for QubitRabi {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::QubitRabi
    }

    fn description(&self) -> &'static str {
        "Rabi flops between the S1/2 Zeeman sublevels (us scan)"
    }

    fn default_scan(&self) -> Option<ScanSpec> {
        Some(ScanSpec::linear(0.0, 100.0, 201))
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let cfg = &ctx.config.qubit_rabi;
        let t_us = ctx.scan(self.default_scan().unwrap());
        let t: Vec<f64> = t_us.iter().map(|v| v * 1e-6).collect();
        let curve = qubit_rabi_signal(cfg.rabi_khz * 1e3, cfg.detuning_khz * 1e3, &t, cfg.decay_us * 1e-6)
            .map_err(|e| RunError::model(self.kind(), e))?;
        let (y, err) = measure(&curve.y, cfg.shots, ctx.config.seed, 0);
        let mut out = Outputs::default();
        out.plotted_csv(
            "qubit_rabi",
            &signal_table("us", &t_us, &y, &err),
            qubit_plot("Zeeman qubit Rabi flops", "pulse length"),
        );
        Ok(out)
    }
}

pub struct Ramsey;

impl Experiment for Ramsey {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Ramsey
    }

    fn description(&self) -> &'static str {
        "Monte Carlo Ramsey fringes under magnetic field noise (us scan)"
    }

    fn default_scan(&self) -> Option<ScanSpec> {
        Some(ScanSpec::linear(0.0, 3000.0, 151))
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let cfg = &ctx.config.ramsey;
        let t_us = ctx.scan(self.default_scan().unwrap());
        let t: Vec<f64> = t_us.iter().map(|v| v * 1e-6).collect();
        let curve = ramsey_signal(&ctx.config.noise_model(), cfg.detuning_khz * 1e3, &t, cfg.shots_per_point)
            .map_err(|e| RunError::model(self.kind(), e))?;
        let err = curve.y_err.clone().unwrap_or_else(|| vec![0.0; t.len()]);
        let mut out = Outputs::default();
        out.plotted_csv(
            "ramsey",
            &signal_table("us", &t_us, &curve.y, &err),
            qubit_plot("Ramsey fringes", "free evolution time"),
        );
        Ok(out)
    }
}
