//! Deterministic derivation of independent RNG streams.
//!
//! Reproducibility contract: every stochastic entry point takes an explicit
//! seed, and child streams (chains, grid cells) are derived from it through
//! a splittable counter scheme so that re-runs are bit-identical and streams
//! do not overlap by construction.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; a cheap, well-mixed 64-bit permutation.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed at an index path below `base`, e.g. `[cell, chain]`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut s = splitmix64(base);
    for &idx in path {
        s = splitmix64(s ^ splitmix64(idx.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    s
}

pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
