//! Doppler-cooling fluorescence spectrum with the dark resonance.

use super::{Axis, Experiment, Outputs, PlotDescriptor, RunContext, RunError};
use crate::atom_optics::{dark_resonance_positions, fluorescence_spectrum, LevelScheme};
use crate::config::{ExperimentKind, ScanSpec};
use crate::signal::CsvTable;

pub struct Spectrum;

impl Experiment for Spectrum {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Spectrum
    }

    fn description(&self) -> &'static str {
        "fluorescence against 422 nm detuning (first laser swept)"
    }

    fn default_scan(&self) -> Option<ScanSpec> {
        Some(ScanSpec::linear(-40.0, 30.0, 141))
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let kind = self.kind();
        let cfg = &ctx.config.spectrum;
        let fields = ctx.config.laser_fields()?;
        let scheme = LevelScheme::sr88(&ctx.constants, cfg.magnetic_field_g);
        let grid = ctx.scan(self.default_scan().unwrap());
        let curve = fluorescence_spectrum(&scheme, &fields, &grid, &cfg.detection()).map_err(|e| RunError::model(kind, e))?;

        let mut table = CsvTable::new(&["delta422_MHz", "counts_per_ms"], &["MHz", "1/ms"]);
        if let Some(repump) = ctx.config.lasers.iter().find(|l| l.line == "1092") {
            let dips = dark_resonance_positions(&scheme, repump.detuning_mhz, cfg.magnetic_field_g);
            let list: Vec<String> = dips.iter().map(|d| format!("{d:.4}")).collect();
            table = table.comment(format!("dark resonances (MHz): {}", list.join(" ")));
        }
        for (x, y) in curve.x.iter().zip(&curve.y) {
            table.push_numeric(&[*x, *y]);
        }
        let mut out = Outputs::default();
        out.plotted_csv(
            "spectrum",
            &table,
            PlotDescriptor::new(
                "line",
                "422 nm fluorescence spectrum",
                Axis::new("delta422_MHz", "422 nm detuning", "MHz"),
                vec![Axis::new("counts_per_ms", "counts", "1/ms")],
            ),
        );
        Ok(out)
    }
}
