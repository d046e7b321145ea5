//! Configuration, dispatch and output for the `lambda-detector` binary.

pub mod commands;
pub mod config;
pub mod plot;
pub mod table;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{convergence_audit, run_command, AuditReport, CommandResult, Output};
pub use config::{parse_config, RunConfig};
pub use table::ResultTable;

/// Environment variable overriding the default worker count.
pub const JOBS_ENV: &str = "LAMBDA_DETECTOR_JOBS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Command {
    Rates,
    Match,
    Reflection,
    Capture,
    SweepLength,
    SweepMap,
    Reset,
    SweepReset,
    Audit,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 2,
            CliError::Divergence(_) => 3,
            _ => 1,
        }
    }
}

impl From<lambda_core::Error> for CliError {
    fn from(e: lambda_core::Error) -> Self {
        match e {
            lambda_core::Error::Divergence { .. } => CliError::Divergence(e.to_string()),
            lambda_core::Error::InvalidArgument(_) | lambda_core::Error::NoMatch(_) => CliError::Invalid(e.to_string()),
            lambda_core::Error::Singular(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Worker count: explicit value, then the environment override, then all cores.
pub fn resolve_jobs(explicit: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    if let Some(n) = explicit {
        return if n > 0 { Ok(n) } else { Err(CliError::Config("--jobs must be at least 1".into())) };
    }
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("{JOBS_ENV}: expected a positive integer, got '{v}'"))),
        };
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `command` and writes its tables (and plots when asked) into `out`.
pub fn execute(command: Command, config: &RunConfig, out: &Path, plots: bool) -> Result<(CommandResult, Vec<PathBuf>), CliError> {
    let mut result = run_command(command, config)?;
    if command == Command::Audit {
        for (path, matches) in commands::check_footers(out, &config.hash)? {
            let state = if matches { "matches" } else { "differs from" };
            result.summary.push(format!("{}: footer hash {state} this config", path.display()));
        }
    }
    let mut written = Vec::new();
    for output in &result.outputs {
        written.push(output.table.write(out)?);
        if let (true, Some(spec)) = (plots, &output.plot) {
            let path = out.join(format!("{}.svg", output.table.name));
            plot::emit_plot(&output.table, spec, &path)?;
            written.push(path);
        }
    }
    Ok((result, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_resolution() {
        assert_eq!(resolve_jobs(Some(3), Some("5")).unwrap(), 3);
        assert_eq!(resolve_jobs(None, Some("5")).unwrap(), 5);
        assert!(resolve_jobs(None, Some("many")).is_err());
        assert!(resolve_jobs(Some(0), None).is_err());
        assert!(resolve_jobs(None, None).unwrap() >= 1);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(lambda_core::Error::Divergence { time: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::from(lambda_core::Error::Singular("s".into())).exit_code(), 1);
    }
}
