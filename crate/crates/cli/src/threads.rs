use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{CliError, Result};

/// Caps worker threads; unset means one per core.
pub const THREADS_ENV: &str = "WINDBENCH_THREADS";

pub fn thread_pool() -> Result<ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                return Err(CliError::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got {raw:?}"
                )))
            }
        },
        Err(_) => 0,
    };
    ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))
}
