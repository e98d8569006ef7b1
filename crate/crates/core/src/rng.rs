//! Seeding rules shared by every stochastic component.
//!
//! A child stream is seeded with `mix(root ^ mix(stream))`, where `mix` is the
//! SplitMix64 finalizer. Mixing the stream index first keeps nearby roots from
//! sharing children (`root ^ stream` alone is symmetric in the two). Replicas
//! and samplers get the same seeds whatever order or thread creates them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, stream: u64) -> u64 {
    mix(root ^ mix(stream))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
