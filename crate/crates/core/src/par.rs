//! Slab-parallel sweeps with a fixed reduction order.
//!
//! Partial results are produced per chunk and combined pairwise in chunk
//! order, so sums do not depend on the number of worker threads.

use alloc::vec::Vec;
use core::ops::Range;

/// Applies `f(first_index, chunk)` to consecutive chunks of `data`.
pub(crate) fn chunks_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(c, s)| f(c * chunk, s));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (c, s) in data.chunks_mut(chunk).enumerate() {
            f(c * chunk, s);
        }
    }
}

/// Maps chunk ranges of `0..len` and returns the per-chunk results in order.
pub(crate) fn map_chunks<R, F>(len: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let range = |c: usize| c * chunk..((c + 1) * chunk).min(len);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(|c| f(range(c))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(|c| f(range(c))).collect()
    }
}

/// Pairwise (tree) summation.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Deterministic sum of `f(i)` over `0..len`.
pub(crate) fn sum<F>(len: usize, chunk: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partials = map_chunks(len, chunk, |r| {
        let mut acc = 0.0;
        for i in r {
            acc += f(i);
        }
        acc
    });
    pairwise_sum(&partials)
}

/// Deterministic dot product of two equally long slices.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.len(), DOT_CHUNK, |i| a[i] * b[i])
}

pub(crate) const DOT_CHUNK: usize = 1 << 14;

/// Like [`chunks_mut`] but collects one result per chunk, in order.
pub(crate) fn map_chunks_mut<T, R, F>(data: &mut [T], chunk: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .enumerate()
            .map(|(c, s)| f(c * chunk, s))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk)
            .enumerate()
            .map(|(c, s)| f(c * chunk, s))
            .collect()
    }
}
