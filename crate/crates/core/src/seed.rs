//! Seed derivation for reproducible Monte Carlo runs.
//!
//! Every trial gets its own stream from `(master, stream, index)` so results
//! do not depend on the order in which trials execute.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// Stream tags keep different consumers of one master seed apart.
pub mod stream {
    pub const ROOTS: u64 = 1;
    pub const GRID_PHASE: u64 = 2;
    pub const JITTER: u64 = 3;
    pub const DIGITS: u64 = 4;
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Counter-mode split: the seed of item `index` in `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut outer = SplitMix64::seed_from_u64(master ^ stream.wrapping_mul(GOLDEN_GAMMA));
    let base = outer.next_u64();
    SplitMix64::seed_from_u64(base.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA))).next_u64()
}

pub fn rng_from_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
