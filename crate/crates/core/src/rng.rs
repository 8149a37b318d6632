//! Deterministic per-unit random streams.
//!
//! Every independent unit of work (a signaling block, a jamming trial, a
//! batch of samples) gets its own ChaCha8 stream, keyed by the master seed
//! and selected by the unit's index. Results are therefore identical no
//! matter how the units are spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run `f` inside a pool with `workers` threads, or on the global pool when
/// `workers` is `None`.
pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
