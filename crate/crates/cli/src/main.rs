//! `qvibe`: simulate timestamp streams, analyze them, and run the trial,
//! sweep, comparison and bound experiments.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for file and
//! stream-format errors, 4 for analysis failures.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qvibe_core::metrology::Mode;

use commands::{Context, ReportFormat};
use config::{RawConfig, ScenarioConfig};
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "qvibe", version, about = "Two-photon interference vibrometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario file (key = value sections, or JSON).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides analysis.p_fa.
    #[arg(long = "p-fa")]
    p_fa: Option<f64>,
    /// Overrides analysis.f_max, in Hz.
    #[arg(long = "f-max")]
    f_max: Option<f64>,
    /// Overrides run.mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: qvibe_core::Error| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the two detection streams and write them with the ground truth.
    Simulate(Common),
    /// Detect, refine and reconstruct from two stream files.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Coincidence (or port-1) stream.
        first: PathBuf,
        /// Anti-coincidence (or port-2) stream.
        second: PathBuf,
    },
    /// Repeated exposures per amplitude: precision and accuracy table.
    Trials(Common),
    /// Discrete sine sweep.
    Sweep(Common),
    /// Quantum versus classical under the loss/background schedule.
    Advantage(Common),
    /// Quantum Cramér-Rao bound, optionally with a Monte-Carlo check.
    Qcrb(Common),
}

fn context(common: &Common) -> CliResult<Context> {
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::from_raw(&RawConfig::parse_ini("")?)?,
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(p) = common.p_fa {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::config(format!("--p-fa must lie in (0, 1), got {p}")));
        }
        config.analysis.p_fa = p;
    }
    if let Some(f) = common.f_max {
        if !(f > 0.0 && f.is_finite()) {
            return Err(CliError::config(format!("--f-max must be positive, got {f}")));
        }
        config.analysis.f_max = f;
    }
    if let Some(m) = common.mode {
        config.mode = m;
    }
    let out = common.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("qvibe-out"));
    Ok(Context { config, out, format: common.format })
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("QVIBE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("QVIBE_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate(c) => commands::simulate(&context(c)?),
        Command::Estimate { common, first, second } => commands::estimate(&context(common)?, first, second),
        Command::Trials(c) => commands::trials(&context(c)?),
        Command::Sweep(c) => commands::sweep(&context(c)?),
        Command::Advantage(c) => commands::advantage(&context(c)?),
        Command::Qcrb(c) => commands::qcrb(&context(c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qvibe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
