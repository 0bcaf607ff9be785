//! Seeded randomness.
//!
//! Every random draw in the library comes from a [`ChaCha20Rng`] built from a
//! `u64` seed. Independent streams (one per trial, one per sub-task) are
//! derived from a master seed with [`child_seed`], so results do not depend
//! on how trials are scheduled.

use rand::SeedableRng;
pub use rand_chacha::ChaCha20Rng as DpRng;

/// Generator for `seed`.
pub fn rng_from_seed(seed: u64) -> DpRng {
    DpRng::seed_from_u64(seed)
}

/// Seed of stream `index` under `master`: SplitMix64 finalizer applied to
/// `master` and the golden-ratio-spaced stream offset.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for stream `index` under `master`.
pub fn child_rng(master: u64, index: u64) -> DpRng {
    rng_from_seed(child_seed(master, index))
}
