//! Deterministic per-item seeding.
//!
//! Every image processed by a run gets its own random stream. The stream seed
//! is derived from the run's master seed and the item's ordinal with the
//! SplitMix64 output function:
//!
//! ```text
//! z = master + (index + 1) * 0x9E3779B97F4A7C15        (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9              (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB              (wrapping)
//! seed = z ^ (z >> 31)
//! ```
//!
//! That is, `derive_item_seed(m, i)` equals the `(i + 1)`-th output of a
//! SplitMix64 generator started at state `m`. Only 64-bit integer arithmetic
//! is involved, so the value is identical on every platform and easy to
//! reproduce from other languages. `derive_item_seed(0, 0)` is
//! `0xE220A8397B1DCDAF`.
//!
//! The derived seed initializes a ChaCha8 stream (`rand_chacha`), which is
//! itself portable and reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The random stream type used throughout the crate.
pub type ItemRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_item_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Random stream for item `index` of a run seeded with `master`.
pub fn item_rng(master: u64, index: u64) -> ItemRng {
    ChaCha8Rng::seed_from_u64(derive_item_seed(master, index))
}

/// Serializable seed policy: a master seed plus the derivation above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SeedPolicy {
    pub master_seed: u64,
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn item_seed(&self, index: u64) -> u64 {
        derive_item_seed(self.master_seed, index)
    }

    pub fn item_rng(&self, index: u64) -> ItemRng {
        item_rng(self.master_seed, index)
    }
}
