//! `sgsim` — Stern-Gerlach wavepacket simulator front end.
//!
//! Subcommands: `evolve` (one run, observable and coherence series),
//! `validate` (dual-propagator cross-check with a convergence study),
//! `scan` (regime map over a parameter sweep), `ensemble` (visibility
//! under shot-to-shot jitter). Exit codes: 0 success, 1 physics/tolerance
//! failure, 2 usage or config error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{OutputFormat, RunConfig};
use output::OutDir;

#[derive(Debug)]
pub enum AppError {
    /// Bad invocation or configuration (exit code 2).
    Usage(String),
    /// The physics or a tolerance failed (exit code 1).
    Physics(String),
}

impl AppError {
    pub fn physics(err: impl std::fmt::Display) -> Self {
        AppError::Physics(err.to_string())
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        AppError::Physics(format!("{context}: {err}"))
    }
}

#[derive(Parser)]
#[command(
    name = "sgsim",
    version,
    about = "Stern-Gerlach spin-1/2 wavepacket simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one configuration and emit observable and coherence series
    Evolve(RunArgs),
    /// Cross-check the closed-form and split-operator propagators
    Validate(RunArgs),
    /// Sweep apparatus parameters and classify each point
    Scan(RunArgs),
    /// Ensemble-average the branch overlap under apparatus jitter
    Ensemble(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (default: timestamped directory under the cwd)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed override for all stochastic sampling
    #[arg(long)]
    seed: Option<u64>,

    /// Output format override
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,

    /// Repeatable config override
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn parse_format(raw: &str) -> Result<OutputFormat, String> {
    match raw {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(format!("'{other}' is not csv or json")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Physics(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    let args = match &cli.command {
        Command::Evolve(a) | Command::Validate(a) | Command::Scan(a) | Command::Ensemble(a) => a,
    };
    let file_text =
        match &args.config {
            Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
                AppError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?),
            None => None,
        };
    let config = RunConfig::from_sources(file_text.as_deref(), &args.set, args.seed, args.format)?;
    let out = OutDir::create(args.out.clone())?;

    match cli.command {
        Command::Evolve(_) => commands::evolve::run(&config, &out),
        Command::Validate(_) => commands::validate::run(&config, &out),
        Command::Scan(_) => commands::scan::run(&config, &out),
        Command::Ensemble(_) => commands::ensemble::run(&config, &out),
    }
}
