//! Scenario-parallel map with a fixed chunking, so every reduction happens in
//! the same order whatever the number of worker threads.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::Result;

pub(crate) const CHUNK: usize = 64;

/// Applies `f` to consecutive scenario ranges of length [`CHUNK`] and returns
/// the results in range order. The first error in range order wins.
pub(crate) fn map_chunks<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<usize>) -> Result<T> + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let results: Vec<Result<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect();
    results.into_iter().collect()
}

/// Per-scenario map, results in scenario order.
pub(crate) fn map_scenarios<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let nested = map_chunks(n, |range| range.map(&f).collect::<Result<Vec<T>>>())?;
    Ok(nested.into_iter().flatten().collect())
}

/// Chunks processed per parallel wave in [`fold_chunks`].
const WAVE: usize = 64;

/// Ordered map-reduce over scenario chunks with bounded memory: chunks are
/// mapped in parallel one wave at a time and merged strictly in range order.
pub(crate) fn fold_chunks<A, F, M>(n: usize, mut acc: A, map: F, mut merge: M) -> Result<A>
where
    A: Send,
    F: Fn(Range<usize>) -> Result<A> + Sync + Send,
    M: FnMut(&mut A, A),
{
    let chunks = n.div_ceil(CHUNK);
    let mut start = 0;
    while start < chunks {
        let end = (start + WAVE).min(chunks);
        let partials: Vec<Result<A>> = (start..end)
            .into_par_iter()
            .map(|c| map(c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect();
        for p in partials {
            merge(&mut acc, p?);
        }
        start = end;
    }
    Ok(acc)
}
