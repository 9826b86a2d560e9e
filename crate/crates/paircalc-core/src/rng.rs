//! Seeded generator construction.
//!
//! All sampling entry points take a `u64` seed and build their generator
//! here, so runs are reproducible and parallel partitions can use
//! independent streams derived from one seed.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Generator for a plain seeded run.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`.
///
/// Streams with the same seed and different stream ids never overlap, so
/// chunked sampling can be merged in chunk order regardless of how many
/// workers ran the chunks.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}
