//! Batch front end: `modes`, `propagate`, `gnh`, `hodge` and `classify`
//! subcommands driven by a TOML configuration.
//!
//! Exit codes: 0 success; 2 spectral precondition violated (operator not
//! nonnegative); 3 constraint violation; 4 chain non-termination; 5 I/O or
//! shape errors; 1 anything else.

mod assemble;
mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] gnh_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("constraint chain did not terminate within {0} steps")]
    NonTermination(usize),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(gnh_core::Error::Io(e))
    }
}

fn exit_code(err: &CliError) -> u8 {
    match err {
        CliError::NonTermination(_) => 4,
        CliError::Config(_) => 5,
        CliError::Core(e) => match e {
            gnh_core::Error::NotNonNegative { .. } => 2,
            gnh_core::Error::ConstraintViolated { .. } => 3,
            gnh_core::Error::Shape(_)
            | gnh_core::Error::DimensionMismatch { .. }
            | gnh_core::Error::Parse(_)
            | gnh_core::Error::InvalidInput(_)
            | gnh_core::Error::Io(_) => 5,
            _ => 1,
        },
    }
}

/// Shared run context from the global flags.
pub struct Context {
    pub cache_dir: Option<PathBuf>,
    pub threads: usize,
    pub seed: u64,
}

#[derive(Parser)]
#[command(
    name = "gnh",
    about = "Constraint analysis and exact propagation for discretized boundary-field models",
    version
)]
struct Cli {
    /// Path to the TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for eigendecomposition caches (overrides [cache].dir)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Worker threads for independent time points
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Seed for generated test states
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Override a scalar config key, e.g. --set grid.dim=2
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue table of the model operator (cached)
    Modes,
    /// Exact propagation over the configured time grid
    Propagate,
    /// Constraint chain, gauge count and classification
    Gnh,
    /// Hodge decomposition of an edge field
    Hodge,
    /// Alias of `gnh` reporting only the class
    Classify,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(config_path, &cli.set)?;
    let ctx = Context {
        cache_dir: cli.cache_dir.clone(),
        threads: cli.threads.max(1),
        seed: cli.seed,
    };
    match cli.command {
        Command::Modes => commands::modes::run(&cfg, &ctx),
        Command::Propagate => commands::propagate::run(&cfg, &ctx),
        Command::Gnh => commands::gnh::run(&cfg, &ctx, false),
        Command::Hodge => commands::hodge::run(&cfg, &ctx),
        Command::Classify => commands::gnh::run(&cfg, &ctx, true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
