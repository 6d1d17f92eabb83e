//! Fit of a registered model to a data file.
//!
//! The first column is x. Every later column whose name does not end in
//! `std_err` is one channel of y values, optionally followed by its
//! `*std_err` column. Channels are stacked in file order.

use super::{Axis, Experiment, Outputs, PlotDescriptor, RunContext, RunError};
use crate::config::{ConfigError, ExperimentKind};
use crate::fitting::models::{lookup, registry, ModelContext};
use crate::fitting::{fit, grid_init, render_report, Bound, FitError, FitOptions, FitProblem, FitResult};
use crate::signal::{format_float, CsvTable, SignalCurve};

/// Stacked channels read from a data file.
#[derive(Clone, Debug, PartialEq)]
pub struct FitData {
    pub curve: SignalCurve,
    pub channels: usize,
    pub points_per_channel: usize,
}

fn x_unit_of(table: &CsvTable) -> Option<String> {
    if let Some(u) = table.comment_value("x") {
        return Some(u.to_string());
    }
    let units = table.comment_value("units")?;
    let first = units.split(',').next()?;
    first.split_once('=').map(|(_, u)| u.trim().to_string())
}

/// Parses `text` for a model with `channels` channels whose x unit is
/// `x_unit` (`"any"` accepts every unit).
pub fn read_fit_data(text: &str, channels: usize, x_unit: &str) -> Result<FitData, RunError> {
    let table = CsvTable::parse(text).map_err(|e| RunError::SchemaMismatch(e.to_string()))?;
    if table.rows.is_empty() {
        return Err(RunError::SchemaMismatch("data file has no rows".into()));
    }
    if x_unit != "any" {
        if let Some(u) = x_unit_of(&table) {
            if u != x_unit {
                return Err(RunError::SchemaMismatch(format!("x unit is {u}, model expects {x_unit}")));
            }
        }
    }
    let h = &table.header;
    let value_cols: Vec<usize> = (1..h.len()).filter(|&i| !h[i].ends_with("std_err")).collect();
    if value_cols.len() != channels {
        return Err(RunError::SchemaMismatch(format!(
            "model needs {channels} value column(s), file has {} ({})",
            value_cols.len(),
            h.join(", ")
        )));
    }
    let column = |i: usize| -> Result<Vec<f64>, RunError> {
        table
            .column(&h[i])
            .expect("header index")
            .map_err(|e| RunError::SchemaMismatch(e.to_string()))
    };
    let x = column(0)?;
    let mut curve: Option<SignalCurve> = None;
    for &i in &value_cols {
        let mut c = SignalCurve::new(x.clone(), column(i)?).expect("columns share the row count");
        if i + 1 < h.len() && h[i + 1].ends_with("std_err") {
            c = c.with_errors(column(i + 1)?).expect("columns share the row count");
        }
        curve = Some(match curve {
            None => c,
            Some(acc) => acc.concat(&c),
        });
    }
    Ok(FitData {
        curve: curve.expect("at least one channel"),
        channels,
        points_per_channel: x.len(),
    })
}

fn fit_error(e: FitError) -> RunError {
    match e {
        FitError::InvalidProblem(m) => RunError::Config(ConfigError::Invalid(m)),
        other => RunError::model(ExperimentKind::Fit, other),
    }
}

pub struct FitCommand;

impl Experiment for FitCommand {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Fit
    }

    fn description(&self) -> &'static str {
        "least-squares fit of a named model to a data file"
    }

    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError> {
        let spec = ctx
            .config
            .fit
            .as_ref()
            .ok_or_else(|| ConfigError::MissingSection("fit".into()))?;
        let factory = lookup(&spec.model).ok_or_else(|| {
            let names: Vec<&str> = registry().iter().map(|f| f.name()).collect();
            ConfigError::Invalid(format!("unknown fit model `{}` (available: {})", spec.model, names.join(", ")))
        })?;
        let text = std::fs::read_to_string(&spec.data_file).map_err(|e| ConfigError::Io {
            path: spec.data_file.clone(),
            msg: e.to_string(),
        })?;
        let data = read_fit_data(&text, factory.channels(), factory.x_unit())?;

        let mut mctx = ModelContext {
            settings: spec.settings.clone(),
            constants: ctx.constants.clone(),
        };
        if factory.settings().iter().any(|(k, _)| *k == "red_points") && !mctx.settings.contains_key("red_points") {
            mctx.settings.insert("red_points".into(), data.points_per_channel as f64);
        }
        let model = factory.build(&mctx).map_err(fit_error)?;

        let params = factory.params();
        let names: Vec<&str> = params.iter().map(|p| p.name).collect();
        for key in spec.init.keys().chain(spec.bounds.keys()).chain(spec.grid.keys()) {
            if !names.contains(&key.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "model {} has no parameter `{key}` (parameters: {})",
                    spec.model,
                    names.join(", ")
                ))
                .into());
            }
        }
        let init: Vec<f64> = params.iter().map(|p| spec.init.get(p.name).copied().unwrap_or(p.init)).collect();
        let bounds: Vec<Bound> = params
            .iter()
            .map(|p| match spec.bounds.get(p.name) {
                Some([lo, hi]) => Bound::new(*lo, *hi),
                None => p.bound(),
            })
            .collect();
        let mut problem = FitProblem::new(model, init, bounds, data.curve.clone()).map_err(fit_error)?;
        let mut weighted = false;
        if spec.weighted {
            if let Some(err) = &data.curve.y_err {
                if err.iter().all(|e| *e > 0.0 && e.is_finite()) {
                    problem = problem.with_weights(err.iter().map(|e| 1.0 / (e * e)).collect()).map_err(fit_error)?;
                    weighted = true;
                }
            }
        }
        if !spec.grid.is_empty() {
            let axes: Vec<Vec<f64>> = params.iter().map(|p| spec.grid.get(p.name).cloned().unwrap_or_default()).collect();
            problem.params_init = grid_init(&problem, &axes).map_err(fit_error)?;
        }

        let options = FitOptions {
            max_iter: spec.max_iterations,
            ..FitOptions::default()
        };
        match fit(&problem, &options) {
            Ok(result) => fit_outputs(&spec.model, &spec.data_file, &problem, &data, &result, weighted),
            Err(FitError::MaxIterationsExceeded(best)) => {
                let partial = fit_outputs(&spec.model, &spec.data_file, &problem, &data, &best, weighted)?;
                Err(RunError::FitNotConverged {
                    iterations: best.iterations,
                    partial: Box::new(partial),
                })
            }
            Err(e) => Err(fit_error(e)),
        }
    }
}

fn fit_outputs(
    model_name: &str,
    data_file: &str,
    problem: &FitProblem,
    data: &FitData,
    result: &FitResult,
    weighted: bool,
) -> Result<Outputs, RunError> {
    let model_y = problem.model.eval(&result.params, &problem.data.x).map_err(fit_error)?;
    let report = format!(
        "data: {data_file}\npoints: {}\nweighted: {}\n{}",
        problem.data.len(),
        if weighted { "1/std_err^2" } else { "no" },
        render_report(model_name, result)
    );

    let mut params = CsvTable::new(&["name", "value", "std_error"], &["-", "model units", "model units"]);
    for (k, name) in result.param_names.iter().enumerate() {
        params.push(vec![name.clone(), format_float(result.params[k]), format_float(result.std_error(k))]);
    }
    let mut overlay = CsvTable::new(&["x_value", "channel", "data", "std_err", "model"], &["data x", "-", "data y", "data y", "data y"]);
    let err = problem.data.y_err.clone().unwrap_or_else(|| vec![0.0; problem.data.len()]);
    for i in 0..problem.data.len() {
        overlay.push(vec![
            format_float(problem.data.x[i]),
            (i / data.points_per_channel).to_string(),
            format_float(problem.data.y[i]),
            format_float(err[i]),
            format_float(model_y[i]),
        ]);
    }

    let mut out = Outputs::default();
    out.text("fit_report.txt", report.clone());
    out.csv("fit_params.csv", &params);
    let mut plot = PlotDescriptor::new(
        "points",
        &format!("{model_name} fit"),
        Axis::new("x_value", "x", "data x"),
        vec![
            Axis::new("data", "data", "data y").with_error("std_err"),
            Axis::new("model", "model", "data y"),
        ],
    );
    if data.channels > 1 {
        plot.facet = Some("channel".into());
    }
    out.plotted_csv("fit_overlay", &overlay, plot);
    out.report = Some(report);
    Ok(out)
}
