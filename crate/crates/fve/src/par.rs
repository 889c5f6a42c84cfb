//! Data-parallel map over index ranges.
//!
//! All hot loops (assembly, norms, stress-point scans) are embarrassingly
//! parallel maps over element or point indices. We always collect the
//! per-index results in index order and combine them sequentially, so the
//! parallel and sequential paths produce bitwise-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential reference path, always available (benchmarks compare against it).
pub(crate) fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}
