//! Counter-based random streams and deterministic sharding.
//!
//! Every ray (or walk) `i` of a run with master seed `s` draws from its own
//! ChaCha8 stream `(s, i)`. Work is cut into fixed-size chunks whose partial
//! results are merged in chunk order, so the outcome is bit-identical for
//! any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Number of consecutive items handled by one task.
pub const CHUNK: u64 = 1 << 14;

/// Random stream for item `index` of a run seeded with `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Map `0..n` in chunks of [`CHUNK`] on `workers` threads and fold the
/// per-chunk results left to right.
pub fn sharded<T, F, M>(n: u64, workers: usize, init: T, per_chunk: F, merge: M) -> Result<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
    M: Fn(T, T) -> T,
{
    if workers == 0 {
        return Err(invalid("workers must be >= 1"));
    }
    let chunks = n.div_ceil(CHUNK);
    let run = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| per_chunk(c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect::<Vec<T>>()
    };
    let parts = if workers == 1 {
        (0..chunks)
            .map(|c| per_chunk(c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(run)
    };
    Ok(parts.into_iter().fold(init, merge))
}
