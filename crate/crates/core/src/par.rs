//! Deterministic data-parallel helpers.
//!
//! Work is cut into chunks whose boundaries depend only on the problem size,
//! never on the number of threads. Partial results are joined with a fixed
//! pairwise tree, so the parallel and sequential builds produce bit-identical
//! floating-point output.

use std::ops::Range;

/// Chunk boundaries `[0, n)` split into pieces of `chunk` items (last one shorter).
pub fn chunk_ranges(n: usize, chunk: usize) -> Vec<Range<usize>> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk)).map(|k| k * chunk..((k + 1) * chunk).min(n)).collect()
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maps `f` over fixed-size chunks of `0..n`, preserving chunk order.
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = chunk_ranges(n, chunk);
    map_indexed(ranges.len(), |k| f(ranges[k].clone()))
}

/// Joins items pairwise, level by level: `((a·b)·(c·d))·e`. The tree shape
/// depends only on `items.len()`.
pub fn tree_reduce<T, F>(mut items: Vec<T>, identity: T, combine: F) -> T
where
    F: Fn(T, T) -> T,
{
    if items.is_empty() {
        return identity;
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop().unwrap()
}

/// Chunked map followed by the fixed tree reduction.
pub fn reduce_chunks<T, M, C>(n: usize, chunk: usize, identity: T, map: M, combine: C) -> T
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync + Send,
    C: Fn(T, T) -> T,
{
    tree_reduce(map_chunks(n, chunk, map), identity, combine)
}

/// Runs `f` on a pool of `threads` workers (0 = library default). Without the
/// `parallel` feature this just calls `f`.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Number of worker threads the current context would use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
