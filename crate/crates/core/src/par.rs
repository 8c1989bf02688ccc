//! Execution schedule for the data-parallel kernels.
//!
//! With the `parallel` feature the kernels fan out over rayon; without it
//! every schedule runs sequentially. Both paths visit the same chunks and
//! combine results with `max`, so outputs do not depend on the thread count.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used when splitting node arrays across workers.
pub(crate) const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Sequential,
    Parallel,
}

impl Default for Schedule {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Schedule::Parallel
        } else {
            Schedule::Sequential
        }
    }
}

impl Schedule {
    /// The schedule that will actually run given the compiled features.
    pub fn effective(self) -> Schedule {
        if cfg!(feature = "parallel") {
            self
        } else {
            Schedule::Sequential
        }
    }

    pub fn is_parallel(self) -> bool {
        self.effective() == Schedule::Parallel
    }
}

/// Fills `out[i] = f(i)`.
pub(crate) fn fill<T, F>(schedule: Schedule, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match schedule.effective() {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => out
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * CHUNK;
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(base + k);
                }
            }),
        _ => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = f(i);
            }
        }
    }
}

/// Runs `f(base, chunk)` over mutable chunks of `data` and returns the
/// maximum of the per-chunk results (or `0.0` for empty input).
pub(crate) fn chunks_max<F>(schedule: Schedule, data: &mut [f64], f: F) -> f64
where
    F: Fn(usize, &mut [f64]) -> f64 + Sync + Send,
{
    match schedule.effective() {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => data
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(c, chunk)| f(c * CHUNK, chunk))
            .reduce(|| 0.0, f64::max),
        _ => data
            .chunks_mut(CHUNK)
            .enumerate()
            .map(|(c, chunk)| f(c * CHUNK, chunk))
            .fold(0.0, f64::max),
    }
}

/// Maximum of `f(i)` over `0..len`, `0.0` when empty.
pub(crate) fn max_over<F>(schedule: Schedule, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    match schedule.effective() {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => (0..len)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(&f)
            .reduce(|| 0.0, f64::max),
        _ => (0..len).map(f).fold(0.0, f64::max),
    }
}

/// Maps `f` over the items, preserving order.
pub(crate) fn map_collect<I, T, F>(schedule: Schedule, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match schedule.effective() {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}
