//! Seed derivation and per-draw random streams.
//!
//! Every random draw in the crate is a pure function of `(seed, index)`:
//! draw `i` uses ChaCha8 stream `i` keyed by `seed`. Parallel callers can
//! therefore partition indices any way they like and still reproduce the
//! sequential result exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DrawRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `seed` and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ tag.rotate_left(17) ^ 0xA076_1D64_78BD_642F)
}

/// Random stream used for draw number `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> DrawRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

// Tags used to separate the roles a seed plays.
pub(crate) const TAG_TRAIN: u64 = 0x7261_696e;
pub(crate) const TAG_TEST: u64 = 0x7465_7374;
pub(crate) const TAG_COIN: u64 = 0x636f_696e;
pub(crate) const TAG_CONDITIONAL: u64 = 0x636f_6e64;
pub(crate) const TAG_PAIRS: u64 = 0x7061_6972;
