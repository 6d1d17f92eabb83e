//! Micromotion detection scan: fluorescence against compensation voltage
//! and injected drive frequency, for both sweep directions.

use super::{Axis, Experiment, Outputs, PlotDescriptor, RunContext, RunError};
use crate::config::{ExperimentKind, ScanSpec};
use crate::signal::CsvTable;
use crate::trap_model::micromotion_scan_both;

pub struct Micromotion;

impl Experiment for Micromotion {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Micromotion
    }

    fn description(&self) -> &'static str {
        "fluorescence map over compensation voltage and drive frequency (MHz scan)"
    }

    fn default_scan(&self) -> Option<ScanSpec> {
        Some(ScanSpec::linear(21.96, 22.06, 201))
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let cfg = &ctx.config.micromotion;
        let f_mhz = ctx.scan(self.default_scan().unwrap());
        let f_hz: Vec<f64> = f_mhz.iter().map(|f| f * 1e6).collect();
        let maps = micromotion_scan_both(&ctx.config.trap_config(), &cfg.drive(), &cfg.v_grid(), &f_hz, &cfg.probe())
            .map_err(|e| RunError::model(self.kind(), e))?;

        let mut table = CsvTable::new(
            &["v_comp_V", "drive_freq_MHz", "sweep_dir", "counts_per_ms"],
            &["V", "MHz", "-", "1/ms"],
        );
        for map in &maps {
            for (i, v) in map.v_grid.iter().enumerate() {
                for (j, f) in f_mhz.iter().enumerate() {
                    table.push(vec![
                        crate::signal::format_float(*v),
                        crate::signal::format_float(*f),
                        map.sweep.label().to_string(),
                        crate::signal::format_float(map.counts[i][j]),
                    ]);
                }
            }
        }
        let mut out = Outputs::default();
        let mut plot = PlotDescriptor::new(
            "heatmap",
            "micromotion scan",
            Axis::new("v_comp_V", "compensation voltage", "V"),
            vec![Axis::new("drive_freq_MHz", "drive frequency", "MHz")],
        );
        plot.z = Some(Axis::new("counts_per_ms", "counts", "1/ms"));
        plot.facet = Some("sweep_dir".into());
        out.plotted_csv("micromotion", &table, plot);
        Ok(out)
    }
}
