//! Deterministic random streams.
//!
//! Every stochastic stage draws from its own ChaCha12 stream keyed by a
//! 64-bit seed, so output is reproducible bit-for-bit across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StageRng = ChaCha12Rng;

/// Stage tags used to split one run seed into independent sub-seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Photons = 1,
    ClassicalModulation = 2,
    Split = 3,
    Analog = 4,
    Adc = 5,
    Sweep = 6,
    ToeplitzSeed = 7,
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Sub-seed for `stage` and an extra `index` (sweep step, run number, ...).
pub fn derive_seed(seed: u64, stage: Stage, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(stage as u64)) ^ index)
}

pub fn stage_rng(seed: u64) -> StageRng {
    ChaCha12Rng::seed_from_u64(seed)
}
