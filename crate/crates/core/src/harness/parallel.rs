use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluate `f(0..n)` on a pool of `workers` threads (0 = all cores) and
/// return the results in index order.
pub fn run_indexed<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}
