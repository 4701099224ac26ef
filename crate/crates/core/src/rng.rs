//! Seeded random streams.
//!
//! Every randomized routine takes a `u64` seed. Independent sub-tasks draw
//! from `stream(seed, task)`, which mixes the task index through SplitMix64
//! before XOR-ing it into the seed, so streams for different tasks do not
//! overlap in practice and do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, task: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed ^ mix64(task))
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
