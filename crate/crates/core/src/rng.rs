//! Seeded random number generation.
//!
//! Every stochastic routine takes an explicit `u64` seed and derives child
//! generators through [`child_seed`], so parallel work (restarts, Monte-Carlo
//! trials) is reproducible regardless of scheduling.

use crate::scalar::{lit, Cplx, Real};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// The generator used throughout the crate.
pub type Generator = ChaCha12Rng;

/// Creates the root generator for a seed.
pub fn root(seed: u64) -> Generator {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derives a decorrelated child seed from a parent seed and a stream index.
///
/// SplitMix64 finalizer; distinct `(seed, stream)` pairs map to distinct
/// streams with overwhelming probability.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for the `stream`-th independent task of a seeded computation.
pub fn child(seed: u64, stream: u64) -> Generator {
    root(child_seed(seed, stream))
}

/// Uniform sample in `[0, 1)`.
pub fn uniform<T: Real>(rng: &mut Generator) -> T {
    lit(rng.random::<f64>())
}

/// Standard normal sample.
pub fn normal<T: Real>(rng: &mut Generator) -> T {
    let x: f64 = StandardNormal.sample(rng);
    lit(x)
}

/// Circularly-symmetric complex Gaussian with unit variance,
/// `CN(0, 1) = (N(0, 1/2) + j·N(0, 1/2))`.
pub fn complex_gaussian<T: Real>(rng: &mut Generator) -> Cplx<T> {
    let s = lit::<T>(0.5).sqrt();
    Cplx::new(normal::<T>(rng) * s, normal::<T>(rng) * s)
}
