//! Reproducible grid-world empowerment experiments driven by TOML files.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_agent, cmd_capacity, cmd_heatmap, cmd_train, RunManifest, RunOptions};
pub use config::{ExperimentConfig, Solver};
pub use error::CliError;

/// Sizes the global rayon pool from `EMPOWERD_THREADS` when it is set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("EMPOWERD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("EMPOWERD_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))
}
