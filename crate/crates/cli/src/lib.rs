//! Experiment driver behind the `mtlab` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod input;
pub mod report;
pub mod reproduce;

pub use config::{run, ExperimentConfig};
pub use error::{CliError, CliResult};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;

pub const WORKERS_ENV: &str = "MTLAB_WORKERS";

/// `MTLAB_WORKERS` if set, else the flag, else the available parallelism.
pub fn resolve_workers(flag: Option<usize>) -> CliResult<usize> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::config(WORKERS_ENV, format!("expected a positive integer, got `{v}`")))?,
        ),
        Err(_) => None,
    };
    if flag == Some(0) {
        return Err(CliError::config("--workers", "must be at least 1"));
    }
    Ok(env.or(flag).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}
