//! Seeded randomness.
//!
//! Every random quantity in the crate comes from `ChaCha8Rng::seed_from_u64`
//! and Gaussian samples use `rand_distr::StandardNormal` (ziggurat), drawn in
//! `f64` and then converted. Independent streams are derived from one user
//! seed with a SplitMix64 finalizer so that, for instance, the two sketches of
//! a regularized solve never share entries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

pub type SolverRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of an independent stream labelled `stream` derived from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` independent standard normal draws.
pub fn gaussian_vec<T: Scalar>(rng: &mut SolverRng, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect()
}
