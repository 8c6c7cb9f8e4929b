//! Command implementations behind the `keepaug` binary.

pub mod bench;
pub mod commands;
pub mod output;

use anyhow::{Context, Result};

pub const THREADS_ENV: &str = "KEEPAUG_THREADS";

/// Runs `f` on a rayon pool capped at `threads` workers (all cores if `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().context("building worker pool")?;
    Ok(pool.install(f))
}
