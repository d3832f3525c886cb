//! Command-line driver: config parsing, subcommands and artifact output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;

/// Environment variable overriding the default output directory.
pub const OUTPUT_ENV: &str = "VVLAB_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("blow-up at t = {t}")]
    BlowUp { t: f64 },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::BlowUp { .. } => 4,
            CliError::Fit(_) => 5,
        }
    }
}

impl From<vvlab::Error> for CliError {
    fn from(e: vvlab::Error) -> Self {
        match e {
            vvlab::Error::InvalidParameter(m) => CliError::Config(m),
            vvlab::Error::BlowUp { t } => CliError::BlowUp { t },
            vvlab::Error::Fit(m) => CliError::Fit(m),
            other => CliError::Precondition(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vvlab", version, about = "Vanishing-viscosity experiments for degenerate compressible flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `VVLAB_OUTPUT_DIR`.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for randomized sampling; overrides `[run] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Derived constants and admissibility conditions.
    Constants,
    /// Background flow samples and the K-matrix bound.
    Background,
    /// Viscous run with energy history.
    Simulate,
    /// Inviscid run with energy history.
    Euler,
    /// Viscosity ladder against a shared Euler run.
    Sweep,
    /// Comparison ODE, closed form and numeric.
    Ode,
    /// Merge manifests into one summary.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Background => "background",
            Command::Simulate => "simulate",
            Command::Euler => "euler",
            Command::Sweep => "sweep",
            Command::Ode => "ode",
            Command::Report => "report",
        }
    }
}

/// Output directory: flag, then environment, then `vvlab-out`.
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("vvlab-out"))
}

/// Loads the config, applies the seed override and runs the subcommand.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    commands::execute(cli.command, &config, &output_dir(cli.output))
}
