//! Command-line front end for the experiments: reads a TOML experiment
//! record, runs one command, and writes a JSON report (plus CSV for the
//! decay-type commands) into the output directory.
//!
//! Exit codes: 0 when every acceptance threshold of the report holds, 1 when
//! one fails, 2 for configuration, solver or I/O failures.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "cli_runner", version, about = "Decay experiments for concentrating Dirac operators")]
pub struct Cli {
    /// Experiment record (TOML). Defaults apply without one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides [run] seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides [run] out.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent jobs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Fiberwise identity suites for the listed cases.
    VerifyAlgebra {
        /// Flip the sign of one frame matrix (negative control).
        #[arg(long)]
        corrupt: bool,
    },
    /// Linear decay sweep over ε.
    Decay,
    /// Picard iteration with the quadratic term, against the linear run.
    NonlinearDecay,
    /// ε^{2/3} scale collapse of the √dist profiles.
    ScaleCollapse,
    /// Green's function comparison bound.
    Green,
    /// Harnack ratios on dyadic annuli.
    Harnack,
    /// Matrix Market export of D or D_ε.
    ExportMatrix,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyAlgebra { .. } => "verify-algebra",
            Command::Decay => "decay",
            Command::NonlinearDecay => "nonlinear-decay",
            Command::ScaleCollapse => "scale-collapse",
            Command::Green => "green",
            Command::Harnack => "harnack",
            Command::ExportMatrix => "export-matrix",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("experiment failed: {0}")]
    Experiment(#[from] experiments::ExperimentError),
    #[error("assembly failed: {0}")]
    Assembly(#[from] op_assembly::OpError),
    #[error("domain error: {0}")]
    Domain(#[from] domain_grid::DomainError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Summary of a finished command.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub passed: bool,
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Loads the config, applies the flag overrides and runs the command.
pub fn execute(cli: &Cli) -> Result<RunSummary, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ExperimentConfig::parse(&src)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment = cli.command.name().to_string();
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.run.out = out.to_string_lossy().into_owned();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    pool.install(|| commands::run(&cli.command, &cfg))
}

/// Runs the command and maps the outcome to the exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(s) => {
            for f in &s.files {
                println!("wrote {}", f.display());
            }
            if s.passed {
                println!("{}: PASS", cli.command.name());
                0
            } else {
                for f in &s.failures {
                    eprintln!("FAIL {f}");
                }
                println!("{}: FAIL", cli.command.name());
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
