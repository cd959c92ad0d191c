//! The deterministic generator shared by simulation, permutation and
//! synthetic-data code.
//!
//! Everything random in this crate is driven by ChaCha8 keyed by a `u64`
//! seed, optionally split into independent streams. Only `u32` ranges and
//! `f64` unit draws are used so that output is identical across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Generator = ChaCha8Rng;

pub fn generator(seed: u64) -> Generator {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` of `seed`. Distinct streams never overlap.
pub fn stream(seed: u64, stream: u64) -> Generator {
    let mut rng = generator(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from `0..n`. `n` must be non-zero.
pub fn below<R: Rng + ?Sized>(rng: &mut R, n: u32) -> u32 {
    rng.gen_range(0..n)
}

/// Uniform draw from `[0, 1)`.
pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}
