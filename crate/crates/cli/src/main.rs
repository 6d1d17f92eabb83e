use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use iontrap::config::{load_config, ConfigError, ExperimentKind};
use iontrap::experiments::{registry, run, RunError};

#[derive(Parser, Debug)]
#[command(name = "iontrap-sim", version, about = "Single-ion Paul trap simulations and fits")]
struct Cli {
    /// spectrum, micromotion, rabi-thermal, sidebands, cooling, heating,
    /// qubit-rabi, ramsey or fit
    experiment: String,
    /// Run configuration (TOML with unit-suffixed keys).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iontrap-sim {}: {e}", cli.experiment);
            if let RunError::FitNotConverged { partial, .. } = &e {
                if let Some(report) = &partial.report {
                    eprintln!("best parameters so far:\n{report}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let kind: ExperimentKind = cli.experiment.parse().inspect_err(|_| {
        let names: Vec<&str> = registry().iter().map(|x| x.kind().name()).collect();
        eprintln!("available experiments: {}", names.join(", "));
    })?;
    let mut config = load_config(&cli.config)?;
    if config.experiment != kind {
        return Err(ConfigError::Invalid(format!(
            "command line asks for `{kind}` but {} is a `{}` config",
            cli.config.display(),
            config.experiment
        ))
        .into());
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let manifest = run(&config)?;
    if let Some(report) = &manifest.report {
        print!("{report}");
    }
    println!(
        "{} -> {} ({} files, config {})",
        kind,
        config.output_dir,
        manifest.outputs.len(),
        &manifest.config_hash[..12]
    );
    Ok(())
}
