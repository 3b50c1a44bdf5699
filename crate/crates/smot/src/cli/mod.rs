//! Command-line front end: configuration, orchestration of the library
//! modules, CSV output and the run manifest.
//!
//! Every run writes `manifest.json` into the output directory, including
//! failed runs. Exit codes: 0 success, 1 output i/o failure, 2 invalid
//! configuration or input, 3 numerical failure, 4 acceptance threshold not met.

mod commands;
mod config;
mod output;

pub use commands::{cmd_dump_coupling, cmd_duality_gap, cmd_simulate, cmd_transition_curve};
pub use config::{
    Command, CouplingConfig, CouplingKind, CurveConfig, DualityConfig, RunConfig, SchemeName, SimulateConfig,
    CONFIG_VERSION,
};
pub use output::{fmt_f64, Report};

use crate::error::{ErrorCategory, SmotError};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

/// Output directory used when neither `--out` nor `output_dir` is given.
pub const DEFAULT_OUT_DIR: &str = "smot-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("acceptance threshold not met: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
            CliError::Acceptance(_) => EXIT_ACCEPTANCE,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation_error",
            CliError::Numerical(_) => "numerical_error",
            CliError::Io(_) => "io_error",
            CliError::Acceptance(_) => "acceptance_failed",
        }
    }
}

impl From<SmotError> for CliError {
    fn from(e: SmotError) -> Self {
        match e.category() {
            ErrorCategory::Validation => CliError::Validation(e.to_string()),
            ErrorCategory::Numerical => CliError::Numerical(e.to_string()),
            ErrorCategory::Io => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "smot", version, about = "Supermartingale optimal transport couplings, simulation and superhedging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Tabulate the one-period coupling maps `x, T_d, T_u, q`.
    DumpCoupling(CommonArgs),
    /// Tabulate the transition curve `t, x1, m, mean`.
    TransitionCurve(CommonArgs),
    /// Simulate a path ensemble and summarise its marginals.
    Simulate(CommonArgs),
    /// Compare the optimal value with Monte Carlo and check the superhedge.
    DualityGap(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "SMOT_THREADS")]
    pub threads: Option<usize>,
}

impl CliCommand {
    fn split(&self) -> (Command, &CommonArgs) {
        match self {
            CliCommand::DumpCoupling(a) => (Command::DumpCoupling, a),
            CliCommand::TransitionCurve(a) => (Command::TransitionCurve, a),
            CliCommand::Simulate(a) => (Command::Simulate, a),
            CliCommand::DualityGap(a) => (Command::DualityGap, a),
        }
    }
}

/// Result of one pass/fail check recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    /// Whether a failure of this check fails the run.
    pub enforced: bool,
}

/// Machine-readable summary written once per run as `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_path: PathBuf,
    pub config: Option<RunConfig>,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub checks: Vec<Check>,
    pub results: serde_json::Map<String, serde_json::Value>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(&cli)
}

/// Runs a parsed command line, writes the manifest and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let (command, args) = cli.command.split();
    let started = Instant::now();
    let mut report = Report::default();
    let mut config = None;
    let mut out_dir = args.out.clone();
    let threads = args.threads.unwrap_or(0);

    let outcome = (|| -> Result<(), CliError> {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
        let mut cfg = RunConfig::load(&args.config)?;
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        match &args.out {
            Some(out) => cfg.output_dir = Some(out.clone()),
            None => out_dir = cfg.output_dir.clone(),
        }
        config = Some(cfg.clone());
        cfg.validate(command)?;
        let dir = resolved_out(&out_dir);
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))?;
        match command {
            Command::DumpCoupling => cmd_dump_coupling(&cfg, &dir, &mut report),
            Command::TransitionCurve => cmd_transition_curve(&cfg, &dir, &mut report),
            Command::Simulate => cmd_simulate(&cfg, &dir, &mut report),
            Command::DualityGap => cmd_duality_gap(&cfg, &dir, &mut report),
        }?;
        let failed: Vec<&str> = report.checks.iter().filter(|c| c.enforced && !c.passed).map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Acceptance(failed.join(", ")))
        }
    })();

    let (status, exit_code, error) = match &outcome {
        Ok(()) => ("ok".to_string(), EXIT_OK, None),
        Err(e) => {
            eprintln!("smot {}: {e}", command.name());
            (e.status().to_string(), e.exit_code(), Some(e.to_string()))
        }
    };
    let manifest = RunManifest {
        tool: "smot".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        config_path: args.config.clone(),
        config,
        status,
        exit_code,
        error,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        checks: report.checks,
        results: report.results,
        warnings: report.warnings,
        files: report.files,
    };
    let dir = resolved_out(&out_dir);
    if let Err(e) = write_manifest(&dir, &manifest) {
        eprintln!("smot {}: cannot write manifest in {}: {e}", command.name(), dir.display());
        return if exit_code == EXIT_OK { EXIT_IO } else { exit_code };
    }
    exit_code
}

fn resolved_out(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")
}

#[cfg(test)]
mod tests;
