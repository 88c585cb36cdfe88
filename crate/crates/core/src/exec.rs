//! Index-ordered map used by the replicate and per-unit loops.
//!
//! Output element `k` always comes from input index `k`, and every reduction
//! downstream folds the collected vector sequentially. That keeps results
//! byte-identical whether the work ran on one worker or many, which the CLI
//! promises for a fixed seed.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to `0..len`, collecting results in index order. Runs on the
/// current rayon pool when the `parallel` feature is enabled and the pool has
/// more than one thread; otherwise falls back to an inline loop.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if rayon::current_num_threads() > 1 {
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    map_indexed_seq(len, f)
}

/// The sequential path, unconditionally. Exists so benchmarks can compare the
/// fallback against the pool without rebuilding the crate.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}
