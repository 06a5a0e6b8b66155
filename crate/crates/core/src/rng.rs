//! The seeded generator behind every random construction.
//!
//! * A 64-bit seed is expanded by splitmix64 into the 256-bit state of
//!   xoshiro256** (the standard `seed_from_u64` expansion).
//! * Uniform integers in `[0, m)`: draw 64 bits, keep the top
//!   `bits(m - 1)` of them, reject and redraw while the value is `>= m`.
//!   `m == 1` returns 0 without consuming randomness.
//! * Uniform reals in `[0, 1)`: the top 53 bits of one draw times `2^-53`.
//! * Independent streams for block `i` (or index chunk `i`) of a
//!   construction are seeded with the `i`-th output (0-based) of the
//!   splitmix64 sequence started at the construction seed.
//!
//! These rules are part of the output contract: the same seed gives the same
//! set, bit for bit, on any platform and any worker count.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The `index`-th output of splitmix64 seeded with `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    SplitMix64::seed_from_u64(seed.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA))).next_u64()
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: Xoshiro256StarStar,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Stream `index` derived from `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        Self::new(sub_seed(seed, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, m)`; `m` must be positive.
    pub fn below(&mut self, m: u64) -> u64 {
        assert!(m > 0, "empty range");
        if m == 1 {
            return 0;
        }
        let bits = 64 - (m - 1).leading_zeros();
        loop {
            let x = self.next_u64() >> (64 - bits);
            if x < m {
                return x;
            }
        }
    }

    /// Uniform real in `[0, 1)` with 53 random mantissa bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
