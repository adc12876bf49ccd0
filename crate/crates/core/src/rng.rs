//! Reproducible randomness.
//!
//! Every random draw comes from ChaCha8 (`rand_chacha`), seeded through
//! `SeedableRng::seed_from_u64`. Streams are split as follows:
//!
//! * generation `t` of a trajectory seeded with `s` draws from
//!   `ChaCha8(seed_from_u64(s))` with the ChaCha stream id set to `t`;
//! * replicate `i` of a batch seeded with `s` uses the trajectory seed
//!   `splitmix64(s + (i + 1) · 0x9E3779B97F4A7C15)`.
//!
//! A generation's draws therefore depend only on `(seed, t)`, so stepping
//! a reloaded session continues exactly where the saved one left off, and
//! batch results do not depend on how replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies the algorithm and stream-splitting rule. Bump on any change
/// that alters the sequence of draws for a given seed.
pub const RNG_ALGORITHM: &str = "chacha8-stream-per-generation-v1";

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Source of draws for generation `t` of the trajectory seeded with `seed`.
pub fn generation_stream(seed: u64, t: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}

/// Trajectory seed for replicate `index` of a batch seeded with `seed`.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// A fresh seed from OS entropy, for runs that were not given one.
pub fn fresh_seed() -> u64 {
    rand::random()
}
