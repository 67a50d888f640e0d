//! Seeding rule shared by every stochastic routine.
//!
//! A run is identified by `(seed, stream)`. Replicate `r` of an experiment with base
//! seed `s` uses `(s, r)`, so replicates are independent and their results do not
//! depend on the order or degree of parallel execution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DesignRng = ChaCha8Rng;

pub fn seeded(seed: u64, stream: u64) -> DesignRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed for an auxiliary computation (tuning, covariance, test sets)
/// so that it does not consume the parent's stream.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
