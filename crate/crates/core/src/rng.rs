//! Seeded pseudo-random source used by every randomized operation.
//!
//! The generator is SplitMix64 (64-bit state). Independent streams are derived
//! from a parent seed and a stream index with [`derive_seed`], so per-item work
//! (one stream per image, per category, per synthetic sample) does not depend on
//! the order in which items are processed. Uniform reals are drawn through
//! `rand` 0.8's `gen_range`, which is part of the reproducibility contract.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

pub use rand::Rng;

/// The generator handed to augmentation, splitting and corpus synthesis.
pub type SeededRng = SplitMix64;

/// Creates a generator from a 64-bit seed.
pub fn seeded(seed: u64) -> SeededRng {
    SplitMix64::seed_from_u64(seed)
}

/// Seed of stream `stream` under `parent`: the SplitMix64 finalizer applied to
/// `parent + (stream + 1) * golden_gamma`.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    let mut z = parent.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for stream `stream` of `parent`.
pub fn split(parent: u64, stream: u64) -> SeededRng {
    seeded(derive_seed(parent, stream))
}
