//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 configuration error, 2 invalid Randers metric,
//! 3 not generalized Berwald, 4 numerical failure (including failed
//! verification checks).

mod commands;
pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{check, connection, transport};
use config::{ConfigError, Overrides, RunConfig};
pub use verify::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Success = 0,
    Config = 1,
    InvalidRanders = 2,
    NotBerwald = 3,
    Numerical = 4,
}

impl From<Code> for ExitCode {
    fn from(c: Code) -> Self {
        ExitCode::from(c as u8)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> Code {
        match self {
            CliError::Config(_) | CliError::Output { .. } => Code::Config,
            CliError::Numerical(_) => Code::Numerical,
        }
    }
}

/// Result of one command: the JSON report, a human-readable summary and the
/// exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: String,
    pub summary: String,
    pub code: Code,
}

#[derive(Debug, Parser)]
#[command(name = "randers", version, about = "Compatible linear connections of Randers metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the metric and decide whether a compatible connection exists.
    Check(CommonArgs),
    /// Construct the compatible and extremal connections at evaluation points.
    Connection(CommonArgs),
    /// Parallel-transport vectors along the configured curves.
    Transport(CommonArgs),
    /// Cross-check every construction against independent oracles.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in example: flat-const, helical, shear, warped-2d.
    #[arg(long, value_name = "NAME")]
    example: Option<String>,
    /// Evaluation point "x1,x2,…" or "random:N"; repeatable.
    #[arg(long = "point", value_name = "POINT", allow_hyphen_values = true)]
    points: Vec<String>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// RK4 step count for every curve.
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
    /// Write the JSON report here.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            example: self.example.clone(),
            points: self.points.clone(),
            seed: self.seed,
            steps: self.steps,
            output: self.output.clone(),
        }
    }
}

/// Captured result of a command-line invocation.
#[derive(Debug, Clone)]
pub struct Execution {
    pub code: Code,
    pub stdout: String,
    pub stderr: String,
}

/// Run the command line `args` (program name first) without touching the
/// process streams.
pub fn run<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Execution {
                    code: Code::Config,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Execution {
                    code: Code::Success,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let (args, command): (&CommonArgs, fn(&RunConfig) -> Result<Outcome, CliError>) = match &cli.command {
        Command::Check(a) => (a, check),
        Command::Connection(a) => (a, connection),
        Command::Transport(a) => (a, transport),
        Command::Verify(a) => (a, verify),
    };
    let result = RunConfig::load(&args.overrides())
        .map_err(CliError::from)
        .and_then(|cfg| {
            let outcome = command(&cfg)?;
            if let Some(path) = &cfg.output {
                fs::write(path, &outcome.report).map_err(|source| CliError::Output {
                    path: path.clone(),
                    source,
                })?;
            }
            Ok(outcome)
        });
    match result {
        Ok(o) => Execution {
            code: o.code,
            stdout: if args.json { o.report } else { o.summary },
            stderr: String::new(),
        },
        Err(e) => Execution {
            code: e.code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

pub fn main() -> ExitCode {
    let exec = run(std::env::args_os());
    let _ = std::io::stdout().write_all(exec.stdout.as_bytes());
    let _ = std::io::stderr().write_all(exec.stderr.as_bytes());
    exec.code.into()
}
