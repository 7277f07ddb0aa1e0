//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator seeded with the run seed and switched
//! to a 64-bit stream id, so set `k` draws the same numbers no matter which
//! thread runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` of the generator family keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed for a nested run (a sweep point, a trial) from a
/// parent seed. Uses the parent family's stream `u64::MAX - salt` so child
/// seeds never overlap the per-set streams of the parent run.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    use rand::RngCore;
    substream(seed, u64::MAX - salt).next_u64()
}
