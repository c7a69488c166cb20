//! Deterministic seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Random stream type used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the bytes of `s`.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Child seed `k` of `seed`.
#[inline]
pub fn derive(seed: u64, k: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(mix64(k.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Per-task seeds for a search: `run_seed(family, grid, fold)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub base_seed: u64,
}

impl Default for SeedPlan {
    fn default() -> Self {
        Self { base_seed: 42 }
    }
}

impl SeedPlan {
    /// Fold index used for the refit on the whole training split.
    pub const FINAL_FOLD: u32 = u32::MAX;

    pub fn new(base_seed: u64) -> Self {
        Self { base_seed }
    }

    /// Distinct `(grid_index, fold)` pairs below `2^32` map to distinct seeds:
    /// the pair is packed into one word, offset by a family-specific constant
    /// and passed through a bijective mixer.
    pub fn run_seed(&self, family: &str, grid_index: u32, fold: u32) -> u64 {
        let offset = mix64(self.base_seed ^ fnv1a(family));
        let packed = ((grid_index as u64) << 32) | fold as u64;
        mix64(offset.wrapping_add(packed))
    }

    pub fn final_seed(&self, family: &str, grid_index: u32) -> u64 {
        self.run_seed(family, grid_index, Self::FINAL_FOLD)
    }
}
