//! Per-call latency measurement: batched runs of at least a minimum
//! duration, best of several repeats.

use std::time::{Duration, Instant};

use crate::background::BackgroundSpec;
use crate::error::{Error, Result};
use crate::explain::Explainer;

pub const DEFAULT_REPEATS: usize = 10;
pub const MIN_BATCH: Duration = Duration::from_millis(100);

/// Calls `f(i)` for `i` cycling over `0..n_items` until a batch lasts at
/// least `min_batch`, and returns the smallest per-call time over `repeats`
/// batches.
pub fn min_per_call<F>(
    n_items: usize,
    repeats: usize,
    min_batch: Duration,
    mut f: F,
) -> Result<Duration>
where
    F: FnMut(usize) -> Result<()>,
{
    if n_items == 0 {
        return Err(Error::InvalidSpec("nothing to time".into()));
    }
    let mut best = Duration::MAX;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let mut calls = 0u32;
        loop {
            for i in 0..n_items {
                f(i)?;
            }
            calls += n_items as u32;
            if start.elapsed() >= min_batch {
                break;
            }
        }
        best = best.min(start.elapsed() / calls);
    }
    Ok(best)
}

/// Single-threaded latency of one explanation under `spec`. Neighbour pools
/// are built before the clock starts.
pub fn explanation_latency(
    explainer: &Explainer<'_>,
    spec: &BackgroundSpec,
    queries: &[Vec<f64>],
    repeats: usize,
) -> Result<Duration> {
    if let Some(q) = queries.first() {
        explainer.explain(q, spec)?;
    }
    min_per_call(queries.len(), repeats, MIN_BATCH, |i| {
        std::hint::black_box(explainer.explain(&queries[i], spec)?);
        Ok(())
    })
}
