mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use diagslice::ErrorKind;
use thiserror::Error;

use args::{Cli, Command, Format};
use commands::Output;

const THREADS_VAR: &str = "DIAGSLICE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(diagslice::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

macro_rules! from_lib {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Lib(e.into())
            }
        }
    )*};
}

from_lib!(
    diagslice::geometry::GeometryError,
    diagslice::sampling::SamplingError,
    diagslice::discrepancy::DiscrepancyError,
    diagslice::optimize::OptimizeError,
    diagslice::experiments::ExperimentError
);

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn io(e: impl std::fmt::Display) -> Self {
        CliError::Io(e.to_string())
    }

    /// 2 usage, 3 numeric failure, 4 sampling degeneracy, 1 i/o.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Usage => 2,
                ErrorKind::Numeric => 3,
                ErrorKind::Sampling => 4,
            },
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}

fn write_output(out: &Output, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&out.bytes).map_err(CliError::io)?;
            stdout.flush().map_err(CliError::io)
        }
        Some(p) => {
            let target = if p.is_dir() {
                let ext = match out.format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                p.join(format!("{}.{ext}", out.file_stem))
            } else {
                p.to_path_buf()
            };
            fs::write(&target, &out.bytes)
                .map_err(|e| CliError::Io(format!("{}: {e}", target.display())))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (out, path) = match &cli.command {
        Command::Partition(a) => (commands::partition(a)?, a.output.out.clone()),
        Command::Sample(a) => (commands::sample(a)?, a.output.out.clone()),
        Command::Discrepancy(a) => (commands::discrepancy(a)?, a.output.out.clone()),
        Command::Optimize(a) => (commands::optimize(a)?, a.output.out.clone()),
        Command::Experiment(e) => (commands::experiment(e)?, experiment_out(e)),
    };
    write_output(&out, path.as_deref())
}

fn experiment_out(e: &args::ExperimentCommand) -> Option<std::path::PathBuf> {
    use args::ExperimentCommand::*;
    let r = match e {
        Convergence { report, .. }
        | VolumeDeviation { report, .. }
        | Comparison { report, .. }
        | ReferencePointsets { report, .. }
        | Kde { report, .. } => report,
    };
    r.output.out.clone()
}

fn parse_args(raw: Vec<OsString>) -> Result<Cli, clap::Error> {
    let root = config::override_self(Cli::command());
    let argv = match config::config_path(&raw) {
        None => raw,
        Some(path) => {
            let spliced = config::read_config(Path::new(&path))
                .and_then(|cfg| config::splice_config(&root, &raw, &cfg));
            match spliced {
                Ok(a) => a,
                Err(msg) => {
                    let mut cmd = root;
                    return Err(cmd.error(clap::error::ErrorKind::InvalidValue, msg));
                }
            }
        }
    };
    let matches = root.try_get_matches_from(argv)?;
    Cli::from_arg_matches(&matches)
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
