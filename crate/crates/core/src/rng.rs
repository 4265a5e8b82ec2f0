//! Deterministic per-trial random streams.
//!
//! Each trial draws from its own ChaCha20 stream whose seed depends only on
//! `(master_seed, trial_index)`, so trials can run in any order or on any
//! number of threads and still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix64(mix64(master) ^ mix64(trial.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// Random stream for a given seed.
pub fn stream(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
