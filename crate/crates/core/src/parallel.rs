//! Deterministic sharded execution on a rayon pool.
//!
//! Samples are split into fixed-size shards independent of the worker count.
//! Shard results come back in shard order, so merging them left to right
//! gives bit-identical output for any number of workers.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const SHARD_SIZE: u64 = 256;

fn shard_ranges(n: u64, shard: u64) -> Vec<Range<u64>> {
    (0..n.div_ceil(shard)).map(|s| s * shard..((s + 1) * shard).min(n)).collect()
}

/// Runs `f` over shards of `0..n`, returning the per-shard results in order.
pub fn map_shards<A, F>(n: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync + Send,
{
    shard_ranges(n, SHARD_SIZE).into_par_iter().map(f).collect()
}

/// As [`map_shards`], with a per-worker scratch value built by `init`.
///
/// The scratch must not carry information between samples; it exists so
/// large buffers are allocated once per worker rather than once per shard.
pub fn map_shards_with<S, A, I, F>(n: u64, init: I, f: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, Range<u64>) -> A + Sync + Send,
{
    shard_ranges(n, SHARD_SIZE).into_par_iter().map_init(init, f).collect()
}

/// Fallible variant of [`map_shards_with`]; the first error in shard order wins.
pub fn try_map_shards_with<S, A, I, F>(n: u64, init: I, f: F) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, Range<u64>) -> Result<A> + Sync + Send,
{
    map_shards_with(n, init, f).into_iter().collect()
}

/// Runs `op` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Compute(format!("thread pool: {e}")))?;
    Ok(pool.install(op))
}
