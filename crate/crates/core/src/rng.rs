//! Seed derivation.
//!
//! Every random draw in the pipeline comes from a ChaCha8 stream whose seed
//! is derived from the run's master seed by mixing in integer counters
//! (image id, sampling-setting index, instance index, tree index). Mixing is
//! SplitMix64, so neighbouring counters give unrelated streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `counter` under `seed`.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ counter.wrapping_mul(GOLDEN))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
