//! Config-driven experiment runner for the contraction lab.
//!
//! Every command reads an [`ExperimentConfig`], writes CSV and JSON files into
//! `output.dir` together with the fully resolved config, and maps failures to
//! the exit codes of [`CliError::exit_code`].

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_identities, cmd_poincare, cmd_simulate, cmd_wave, Outcome};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

/// Environment variable capping the worker threads of the sample scans.
pub const THREADS_ENV: &str = "A_CONTRACTION_LAB_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
