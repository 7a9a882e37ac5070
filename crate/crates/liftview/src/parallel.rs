//! Deterministic data-parallel helpers.
//!
//! Work is split into fixed-size chunks *before* dispatch, each chunk is
//! processed left to right, and chunk results are combined in chunk order.
//! The reduction order therefore never depends on thread count, so the
//! `parallel` feature changes wall time only, never results.

/// Items per chunk for batch map-reduce. Small enough to load-balance on a
/// couple of cores, large enough to amortize per-chunk scratch allocation.
pub const CHUNK: usize = 8;

/// Map `f` over `0..n` in fixed chunks, then fold the per-chunk outputs in
/// chunk order with `combine`.
///
/// `f` receives the index range of one chunk and produces a partial result;
/// `combine` folds partials into the accumulator. Both run identically in
/// sequential and parallel builds.
pub fn chunked_map_reduce<T, A>(
    n: usize,
    init: A,
    f: impl Fn(std::ops::Range<usize>) -> T + Sync,
    mut combine: impl FnMut(&mut A, T),
) -> A
where
    T: Send,
{
    let mut acc = init;
    for part in run_chunks(n, &f) {
        combine(&mut acc, part);
    }
    acc
}

/// Map `f` over each index in `0..n`, collecting results in index order.
pub fn ordered_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let parts = run_chunks(n, &|range: std::ops::Range<usize>| {
        range.map(&f).collect::<Vec<_>>()
    });
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part);
    }
    out
}

#[cfg(feature = "parallel")]
fn run_chunks<T: Send>(
    n: usize,
    f: &(impl Fn(std::ops::Range<usize>) -> T + Sync),
) -> Vec<T> {
    use rayon::prelude::*;
    chunk_ranges(n)
        .into_par_iter()
        .map(|range| f(range))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_chunks<T: Send>(
    n: usize,
    f: &(impl Fn(std::ops::Range<usize>) -> T + Sync),
) -> Vec<T> {
    chunk_ranges(n).into_iter().map(f).collect()
}

/// Sequential reference path, used by the benches to compare against the
/// default dispatch without rebuilding with different features.
pub fn run_chunks_sequential<T: Send>(
    n: usize,
    f: &(impl Fn(std::ops::Range<usize>) -> T + Sync),
) -> Vec<T> {
    chunk_ranges(n).into_iter().map(f).collect()
}

fn chunk_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}
