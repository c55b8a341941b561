//! Deterministic chunked parallelism for point-batch evaluation.
//!
//! Point batches are split into fixed-size chunks; chunk results are
//! combined sequentially in chunk order, so reductions are bit-identical
//! regardless of how many worker threads run them. The pool size comes
//! from the `TSONN_THREADS` environment variable (defaults to all cores).

use std::sync::OnceLock;

/// Fixed chunk size for point batches. Part of the reproducibility
/// contract: changing it changes reduction order.
pub const CHUNK_POINTS: usize = 512;

static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

/// Worker pool sized by `TSONN_THREADS` (or the core count).
pub fn pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        let threads = std::env::var("TSONN_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build worker pool")
    })
}

/// Splits `0..n` into `CHUNK_POINTS`-sized ranges.
pub fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n.div_ceil(CHUNK_POINTS));
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK_POINTS).min(n);
        out.push((start, end));
        start = end;
    }
    out
}

/// Maps `f` over the chunks of `0..n` in parallel and returns the results
/// in chunk order.
pub fn map_chunks<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, usize) -> R + Sync,
{
    let ranges = chunk_ranges(n);
    if ranges.len() <= 1 {
        return ranges.into_iter().map(|(s, e)| f(s, e)).collect();
    }
    use rayon::prelude::*;
    pool().install(|| ranges.par_iter().map(|&(s, e)| f(s, e)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunking_covers_range() {
        for n in [0usize, 1, CHUNK_POINTS - 1, CHUNK_POINTS, 3 * CHUNK_POINTS + 7] {
            let ranges = chunk_ranges(n);
            let total: usize = ranges.iter().map(|(s, e)| e - s).sum();
            assert_eq!(total, n);
            let mut cursor = 0;
            for (s, e) in ranges {
                assert_eq!(s, cursor);
                assert!(e > s);
                cursor = e;
            }
        }
    }

    #[test]
    fn map_chunks_preserves_order() {
        let ids = map_chunks(5 * CHUNK_POINTS + 3, |s, _| s);
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted);
    }
}
