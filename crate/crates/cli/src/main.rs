use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsinv::ErrorCategory;

mod config;
mod output;
mod scenario;

use config::ScenarioConfig;

/// Environment variable naming the output directory when neither the flag
/// nor the config gives one.
pub const OUT_DIR_ENV: &str = "LSINV_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "lsinv-out";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Compute(lsinv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Compute(e) => match e.category() {
                ErrorCategory::Config => 2,
                ErrorCategory::Numerical => 3,
                ErrorCategory::NoSymmetry => 4,
            },
        }
    }

    fn category(&self) -> &'static str {
        match self.exit_code() {
            2 => "config error",
            3 => "numerical failure",
            _ => "no symmetry found",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<lsinv::Error> for CliError {
    fn from(e: lsinv::Error) -> Self {
        CliError::Compute(e)
    }
}

#[derive(Parser)]
#[command(name = "lsinv", version, about = "Two-point invariant currents of 1D lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory [default: config output.directory, then $LSINV_OUT_DIR, then ./lsinv-out]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plane-wave cutoff; caps the sweep of the convergence scenario.
        #[arg(long)]
        k_max: Option<usize>,
        /// Absolute |Q'| floor for constancy detection.
        #[arg(long)]
        floor: Option<f64>,
    },
}

fn load(path: &PathBuf, k_max: Option<usize>, floor: Option<f64>) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = ScenarioConfig::parse(&text)?;
    if let Some(k) = k_max {
        config.basis.k_max = k;
        config.convergence.k_max.retain(|&v| v <= k);
    }
    if floor.is_some() {
        config.detection.floor = floor;
    }
    config.validate()?;
    config.resolved()
}

fn output_dir(flag: Option<PathBuf>, config: &ScenarioConfig) -> PathBuf {
    flag.or_else(|| config.output.directory.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

fn run(config_path: PathBuf, out: Option<PathBuf>, k_max: Option<usize>, floor: Option<f64>) -> Result<(), CliError> {
    let config = load(&config_path, k_max, floor)?;
    let dir = output_dir(out, &config);
    let outcome = scenario::run_scenario(&config, &dir)?;
    eprintln!("lsinv: wrote {} file(s) to {}", outcome.files.len(), dir.display());
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, k_max, floor } => run(config, out, k_max, floor),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lsinv: {}: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
