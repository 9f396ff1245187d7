//! Deterministic parallel map over sample indices.

use rayon::prelude::*;

/// Evaluates `f(i)` for `i in 0..n` and returns results in index order.
/// `workers = None` uses the global pool; `Some(k)` runs on a dedicated pool
/// of `k` threads. Output does not depend on `workers`.
pub fn run_indexed<T, F>(n: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let go = || (0..n as u64).into_par_iter().map(&f).collect::<Vec<T>>();
    match workers {
        None => go(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .expect("thread pool")
            .install(go),
    }
}
