//! Named experiments behind one trait, each reproducing a measurement as
//! CSV tables plus a plot descriptor, and the runner that writes them with
//! a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentKind, RunConfig, ScanSpec};
use crate::constants::{AtomicConstants, ConstantsError};
use crate::signal::CsvTable;

mod fit;
mod motion;
mod optics;
mod qubit;
mod trap;

pub use fit::read_fit_data;

pub const TOOL_VERSION: &str = concat!("iontrap ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("constants error: {0}")]
    Constants(#[from] ConstantsError),
    #[error("data file does not match the model: {0}")]
    SchemaMismatch(String),
    #[error("{experiment}: {message}")]
    Model { experiment: ExperimentKind, message: String },
    #[error("fit did not converge after {iterations} iterations")]
    FitNotConverged { iterations: usize, partial: Box<Outputs> },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub(crate) fn model(experiment: ExperimentKind, e: impl std::fmt::Display) -> Self {
        RunError::Model {
            experiment,
            message: e.to_string(),
        }
    }

    /// Process exit status: 2 config, 3 model, 4 fit non-convergence, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Constants(_) | RunError::SchemaMismatch(_) => 2,
            RunError::Model { .. } => 3,
            RunError::FitNotConverged { .. } => 4,
            RunError::Io { .. } => 1,
        }
    }
}

/// One file produced by an experiment, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<OutputFile>,
    /// Text printed after the run (fit reports).
    pub report: Option<String>,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, table: &CsvTable) {
        self.files.push(OutputFile {
            name: name.to_string(),
            contents: table.render(),
        });
    }

    /// Adds `<stem>.csv` and its `<stem>.plot.json` descriptor.
    pub fn plotted_csv(&mut self, stem: &str, table: &CsvTable, plot: PlotDescriptor) {
        let name = format!("{stem}.csv");
        self.csv(&name, table);
        let plot = PlotDescriptor { data: name, ..plot };
        self.files.push(OutputFile {
            name: format!("{stem}.plot.json"),
            contents: serde_json::to_string_pretty(&plot).expect("plot descriptor serialises") + "\n",
        });
    }

    pub fn text(&mut self, name: &str, contents: String) {
        self.files.push(OutputFile {
            name: name.to_string(),
            contents,
        });
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub column: String,
    pub label: String,
    pub unit: String,
    pub log: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_column: Option<String>,
}

impl Axis {
    pub fn new(column: &str, label: &str, unit: &str) -> Self {
        Self {
            column: column.into(),
            label: label.into(),
            unit: unit.into(),
            ..Default::default()
        }
    }

    pub fn with_error(mut self, column: &str) -> Self {
        self.error_column = Some(column.into());
        self
    }

    pub fn log(mut self, log: bool) -> Self {
        self.log = log;
        self
    }
}

/// Declarative plot description stored next to each CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotDescriptor {
    pub data: String,
    /// "line", "points" or "heatmap".
    pub kind: String,
    pub title: String,
    pub x: Axis,
    pub y: Vec<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Axis>,
    /// Column splitting the data into panels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facet: Option<String>,
}

impl PlotDescriptor {
    pub fn new(kind: &str, title: &str, x: Axis, y: Vec<Axis>) -> Self {
        Self {
            kind: kind.into(),
            title: title.into(),
            x,
            y,
            ..Default::default()
        }
    }
}

pub struct RunContext<'a> {
    pub config: &'a RunConfig,
    pub constants: AtomicConstants,
}

impl RunContext<'_> {
    /// Configured scan, or the experiment's default.
    pub fn scan(&self, default: ScanSpec) -> Vec<f64> {
        self.config.scan.clone().unwrap_or(default).grid()
    }
}

pub trait Experiment: Send + Sync {
    fn kind(&self) -> ExperimentKind;
    fn description(&self) -> &'static str;
    /// x grid used when the config has no `[scan]` section.
    fn default_scan(&self) -> Option<ScanSpec> {
        None
    }
    fn execute(&self, ctx: &RunContext) -> Result<Outputs, RunError>;
}

pub fn registry() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(optics::Spectrum),
        Box::new(trap::Micromotion),
        Box::new(motion::RabiThermal),
        Box::new(motion::Sidebands),
        Box::new(motion::Cooling),
        Box::new(motion::Heating),
        Box::new(qubit::QubitRabi),
        Box::new(qubit::Ramsey),
        Box::new(fit::FitCommand),
    ]
}

pub fn lookup(kind: ExperimentKind) -> Box<dyn Experiment> {
    registry()
        .into_iter()
        .find(|e| e.kind() == kind)
        .expect("every experiment kind is registered")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
    pub outputs: Vec<String>,
    /// Seconds per stage.
    pub timings: BTreeMap<String, f64>,
    #[serde(skip)]
    pub report: Option<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Runs the configured experiment and writes its outputs, the resolved
/// config and `manifest.json` into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<RunManifest, RunError> {
    config.validate()?;
    let ctx = RunContext {
        config,
        constants: AtomicConstants::load()?,
    };
    let experiment = lookup(config.experiment);
    let started = Instant::now();
    let result = experiment.execute(&ctx);
    let compute = started.elapsed().as_secs_f64();
    let (outputs, failure) = match result {
        Ok(o) => (o, None),
        Err(RunError::FitNotConverged { iterations, partial }) => {
            let o = (*partial).clone();
            (o, Some(RunError::FitNotConverged { iterations, partial }))
        }
        Err(e) => return Err(e),
    };

    let started = Instant::now();
    let dir = PathBuf::from(&config.output_dir);
    std::fs::create_dir_all(&dir).map_err(|source| io_error(&dir, source))?;
    let mut names = Vec::new();
    for f in &outputs.files {
        write(&dir.join(&f.name), &f.contents)?;
        names.push(f.name.clone());
    }
    write(&dir.join(CONFIG_FILE), &config.to_toml())?;
    names.push(CONFIG_FILE.to_string());
    names.push(MANIFEST_FILE.to_string());
    let mut timings = BTreeMap::new();
    timings.insert("compute".to_string(), compute);
    timings.insert("write".to_string(), started.elapsed().as_secs_f64());
    let manifest = RunManifest {
        experiment: config.experiment,
        seed: config.seed,
        config_hash: config.config_hash(),
        tool_version: TOOL_VERSION.to_string(),
        outputs: names,
        timings,
        report: outputs.report.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    write(&dir.join(MANIFEST_FILE), &json)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| io_error(path, source))
}

fn io_error(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Signal table `x_value, probability, std_err` with the x unit named in a
/// comment line.
pub(crate) fn signal_table(x_unit: &str, x: &[f64], y: &[f64], err: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["x_value", "probability", "std_err"], &[x_unit, "1", "1"]).comment(format!("x: {x_unit}"));
    for ((a, b), c) in x.iter().zip(y).zip(err) {
        t.push_numeric(&[*a, *b, *c]);
    }
    t
}

/// Projective measurement of each probability with `shots` repetitions;
/// zero shots returns the exact values with zero error.
pub(crate) fn measure(p: &[f64], shots: usize, seed: u64, stream: u64) -> (Vec<f64>, Vec<f64>) {
    if shots == 0 {
        return (p.to_vec(), vec![0.0; p.len()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = shots as f64;
    p.iter()
        .map(|&q| {
            let k = Binomial::new(shots as u64, q.clamp(0.0, 1.0))
                .expect("probability clamped to [0, 1]")
                .sample(&mut rng) as f64;
            let f = k / n;
            (f, (f * (1.0 - f) / n).sqrt())
        })
        .unzip()
}
