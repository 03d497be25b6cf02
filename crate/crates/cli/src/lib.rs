//! Command-line front end: JSON scenario configs in, CSV/JSON results out.
//!
//! `flyq simulate|design|optimize|validate --config <path> [--out <dir>]
//! [--seed <u64>] [--threads <n>]`. Exit codes: 0 success, 2 invalid
//! configuration, 3 numerical failure, 1 output I/O failure.

pub mod config;
pub mod output;
pub mod run;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use flyq_core::FlyqError;

pub use config::{Mode, Prepared, ScenarioConfig};
pub use output::Bundle;
pub use run::{execute, RunOptions};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FlyqError> for CliError {
    fn from(e: FlyqError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "flyq", version, about = "Flying-qubit generation, transformation and pulse optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a `generate` or `transform` scenario.
    Simulate(RunArgs),
    /// Design an auxiliary source for a target packet.
    Design(RunArgs),
    /// Optimize a drive with the genetic algorithm.
    Optimize(RunArgs),
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "FLYQ_THREADS")]
    pub threads: Option<usize>,
}

impl Command {
    fn accepts(&self, mode: Mode) -> bool {
        match self {
            Command::Simulate(_) => matches!(mode, Mode::Generate | Mode::Transform),
            Command::Design(_) => mode == Mode::DesignSource,
            Command::Optimize(_) => mode == Mode::Optimize,
            Command::Validate { .. } => true,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Design(_) => "design",
            Command::Optimize(_) => "optimize",
            Command::Validate { .. } => "validate",
        }
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn run_cli(cli: Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("flyq {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<String, CliError> {
    let path = match command {
        Command::Simulate(a) | Command::Design(a) | Command::Optimize(a) => &a.config,
        Command::Validate { config } => config,
    };
    let cfg = ScenarioConfig::from_path(path)?;
    if !command.accepts(cfg.mode) {
        return Err(CliError::config(format!("`{}` cannot run a {:?} scenario", command.name(), cfg.mode)));
    }
    let args = match command {
        Command::Validate { .. } => {
            cfg.prepare()?;
            return Ok(format!("{}: valid {:?} scenario", path.display(), cfg.mode));
        }
        Command::Simulate(a) | Command::Design(a) | Command::Optimize(a) => a,
    };
    let opts = RunOptions { seed: args.seed, threads: args.threads };
    let bundle = execute(&cfg, &opts)?;
    bundle.write(&args.out)?;
    Ok(format!("wrote {} files to {}", bundle.files().len() + 1, args.out.display()))
}
