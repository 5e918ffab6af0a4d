//! Seedable, splittable randomness.
//!
//! [`Rng`] wraps ChaCha8 keyed by a 64-bit seed and addressed by a 64-bit
//! stream id, so every `(seed, stream)` pair names an independent,
//! platform-stable sequence. Parallel work derives its generators up front
//! with [`Rng::derive`] or [`seed_for`] instead of sharing one generator.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

impl Rng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            seed,
            stream,
        }
    }

    /// Child generator `index` of `seed`. Distinct indices are distinct streams.
    pub fn derive(seed: u64, index: u64) -> Self {
        Self::new(seed, index)
    }

    /// Child of this generator's `(seed, stream)` identity; does not consume
    /// from `self`.
    pub fn child(&self, index: u64) -> Self {
        Self::new(seed_for(&[self.seed, self.stream]), index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
    }

    /// Uniform on the open interval `(lo, hi)`.
    pub fn uniform_between(&mut self, lo: f64, hi: f64) -> f64 {
        let v = lo + (hi - lo) * self.uniform_open();
        // rounding can land exactly on an endpoint for very narrow spans
        v.clamp(lo, hi)
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "Rng::below(0)");
        rand::Rng::random_range(&mut self.inner, 0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// A random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a path of integers (base seed, config index, trial index, ...) into
/// one seed. Order matters: `[1, 2]` and `[2, 1]` give different seeds.
pub fn seed_for(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5EED_0F_F1_7u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Stable 64-bit hash of a string, used to fold names into seed paths.
pub fn seed_from_str(s: &str) -> u64 {
    // FNV-1a
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
