//! Thin switch between rayon and sequential execution.
//!
//! With the `parallel` feature (default) the closures run on the rayon global
//! pool; without it they run sequentially. Results are collected in index
//! order either way, so outputs are identical across both modes and across
//! thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, preserving index order in the output.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
