//! Batch pipeline over the carbon-forecast toolkit: ingest, interpolate,
//! factors, backtest, score, monitor and report, driven by one TOML file.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::Config;
pub use error::{CliError, CliResult};
pub use pipeline::{Manifest, Run};

/// Runs `f` on a pool of `jobs` worker threads, or the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}
