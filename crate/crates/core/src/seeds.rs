//! Counter-based randomness helpers.
//!
//! Every stochastic component in this crate derives its coins from a `u64`
//! seed through the finalizer below, so results are reproducible across
//! platforms and independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Good avalanche, cheap, stable.
#[inline]
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with one salt value.
#[inline]
pub fn mix2(seed: u64, a: u64) -> u64 {
    mix64(seed ^ mix64(a))
}

/// Combine a seed with two salt values (e.g. master seed, k, trial index).
#[inline]
pub fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    mix64(mix2(seed, a) ^ mix64(b.wrapping_add(0x517C_C1B7_2722_0A95)))
}

/// Uniform in [0,1) keyed by (seed, counter). Independent of query order:
/// the draw for a given counter is a pure function of its inputs.
#[inline]
pub fn unit_at(seed: u64, counter: u64) -> f64 {
    (mix2(seed, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stream RNG for shuffles and sampling; ChaCha8 is stable across releases.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact integer square root (largest s with s*s <= x).
pub fn isqrt(x: u64) -> u64 {
    x.isqrt()
}
