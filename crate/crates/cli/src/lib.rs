//! Command-line front end: config parsing, run planning, sweeps and
//! plot-ready exports.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;
pub mod plan;
pub mod plotdata;

pub use config::{Config, ConfigError};
pub use plan::{resolve, RunPlan};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ValidationFailure = 1,
    ConfigError = 2,
    Diverged = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            CliError::Runtime(_) => ExitStatus::Diverged,
            _ => ExitStatus::ConfigError,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pdsgd", version, about = "Distributed primal-dual SGD experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ExecArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to `run.out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Run even when theorem hypotheses are violated.
    #[arg(long)]
    pub force: bool,
    /// Edge-list file replacing the configured graph.
    #[arg(long)]
    pub graph_file: Option<PathBuf>,
    /// Print the canonical config and resolved plan, then exit.
    #[arg(long)]
    pub dump_resolved: bool,
}

impl From<ExecArgs> for commands::ExecOptions {
    fn from(a: ExecArgs) -> Self {
        Self {
            config: a.config,
            out: a.out,
            jobs: a.jobs,
            force: a.force,
            graph_file: a.graph_file,
            dump_resolved: a.dump_resolved,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration over its seeds.
    Run(ExecArgs),
    /// Run the cross product of the `[sweep]` axes.
    Sweep(ExecArgs),
    /// Check the named theorem's hypotheses without running.
    Validate(ExecArgs),
    /// Convert traces or summaries into whitespace-delimited tables.
    Plotdata {
        /// Glob over trace CSVs (timeseries) or summary.json files / run directories.
        pattern: String,
        #[arg(long, value_enum)]
        kind: plotdata::PlotKind,
        /// Trace column for timeseries.
        #[arg(long, default_value = "grad_norm_sq")]
        column: String,
        /// Summary metric for rate and speedup.
        #[arg(long, default_value = "time_avg_grad_norm_sq")]
        metric: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Writes to stdout; a closed pipe (`pdsgd ... | head`) is not an error.
pub(crate) fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

pub fn execute(cli: Cli) -> Result<ExitStatus, CliError> {
    match cli.command {
        Command::Run(a) => commands::cmd_run(&a.into()),
        Command::Sweep(a) => commands::cmd_sweep(&a.into()),
        Command::Validate(a) => commands::cmd_validate(&a.into()),
        Command::Plotdata { pattern, kind, column, metric, out } => {
            plotdata::cmd_plotdata(&pattern, kind, &column, &metric, out.as_deref()).map(|()| ExitStatus::Success)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitStatus::ConfigError as i32 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(status) => status as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_status() as i32
        }
    }
}
