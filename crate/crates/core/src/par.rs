//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the loops run on the rayon pool;
//! without it they are plain iterators. Reductions always combine partial
//! sums in index order so results are identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Partial-sum block length for reductions over flat index ranges.
const BLOCK: usize = 4096;

/// Caps the number of worker threads. Returns `false` when the global pool
/// was already initialised or parallelism is compiled out.
pub fn init_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

/// Applies `f(row_index, row)` to consecutive rows of `data`.
pub fn for_each_row<T, F>(data: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(r, row)| f(r, row));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(r, row)| f(r, row));
}

/// Like [`for_each_row`] but with per-worker scratch state created by `init`.
pub fn for_each_row_init<T, S, I, F>(data: &mut [T], row_len: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(row_len)
        .enumerate()
        .for_each_init(&init, |s, (r, row)| f(s, r, row));
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        data.chunks_mut(row_len)
            .enumerate()
            .for_each(|(r, row)| f(&mut s, r, row));
    }
}

/// Elementwise map over `0..n` into a new vector.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
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

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let partial = map_range(blocks, |b| {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.iter().sum()
}

/// Deterministic maximum of `f(i)` over `0..n` (0 for an empty range).
pub fn max_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    map_range(blocks, |b| {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(n);
        (lo..hi).map(&f).fold(0.0_f64, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// `y[i] = f(i)` for every index.
pub fn fill<F>(y: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n = y.len();
    for_each_row(y, BLOCK.min(n.max(1)), |b, chunk| {
        let base = b * BLOCK.min(n.max(1));
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = f(base + k);
        }
    });
}
