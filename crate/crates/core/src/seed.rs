use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random stream `stream` of the root `seed`.
///
/// Streams are independent of each other, so work items keyed by index can
/// be processed in any order (or in parallel) and still see the same numbers.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A child seed for item `index` of the given root seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // Stream numbers with the top bit set are reserved for seed derivation so
    // they never coincide with a plain `substream(seed, i)`.
    substream(seed, index | (1 << 63)).next_u64()
}
