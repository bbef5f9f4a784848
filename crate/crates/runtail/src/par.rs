//! Thin indirection over rayon so the crate builds with the `parallel`
//! feature disabled. Results must not depend on the execution order; callers
//! combine per-item values with order-independent reductions.

#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sequential variant kept available under both configurations so benchmarks
/// can compare the two code paths directly.
pub fn map_indexed_seq<T>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    (0..n).map(f).collect()
}
