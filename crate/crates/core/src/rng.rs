//! Per-shot seed derivation.
//!
//! Each shot's stream is `ChaCha8Rng::seed_from_u64(shot_seed(master, i))`,
//! so results do not depend on how shots are spread across workers.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn shot_seed(master_seed: u64, shot_index: u64) -> u64 {
    mix64(mix64(master_seed).wrapping_add(GOLDEN.wrapping_mul(shot_index.wrapping_add(1))))
}
