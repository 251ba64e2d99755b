//! Deterministic randomness. Every random quantity in the crate is drawn
//! from a ChaCha8 stream derived from an explicit seed; a master seed fans
//! out to per-run streams via the counter-based stream index, so parallel
//! or reordered execution cannot change any draw.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::{cst, Scalar};

/// The explicit rng state threaded through sampling operations.
pub type RngState = ChaCha8Rng;

/// Root stream for a seed.
pub fn seed_rng(seed: u64) -> RngState {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Counter-based split: independent stream `index` under one master seed.
pub fn split_rng(master_seed: u64, index: u64) -> RngState {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Counter-based per-run seed under one master seed (SplitMix64 step).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[lo, hi)`; draws a single `f64` from the stream so the
/// consumed randomness is identical for every scalar type.
pub fn uniform<F: Scalar>(rng: &mut RngState, lo: F, hi: F) -> F {
    let u: f64 = rng.random();
    lo + (hi - lo) * cst::<F>(u)
}

/// Uniform point in an axis-aligned box.
pub fn uniform_box<F: Scalar>(rng: &mut RngState, lo: &[F], hi: &[F]) -> Vec<F> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| uniform(rng, a, b))
        .collect()
}
