//! Seeded pseudorandom streams.
//!
//! All randomness goes through xoshiro256++ with its state expanded from a
//! 64-bit seed by SplitMix64. Derived quantities (floats, bounded integers,
//! subsets) are computed here from raw `next_u64` output only, so a stream
//! is reproducible in any language that implements those two generators.
//!
//! Reference output, seed 0, first `next_u64`: `0x53175d61490b23df`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

/// Name recorded in manifests.
pub const RNG_ALGORITHM: &str = "xoshiro256++/splitmix64";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn stream(&self) -> Rng {
        Rng(Xoshiro256PlusPlus::seed_from_u64(self.seed))
    }

    /// Independent spec for a sub-task, derived deterministically.
    pub fn derive(&self, salt: u64) -> RngSpec {
        let mut r = RngSpec::new(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15)).stream();
        RngSpec::new(r.next_u64())
    }
}

pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi]; exactly `lo` when the interval is degenerate.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in [0, bound) by Lemire's multiply-and-reject.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// `count` distinct indices from [0, n) via a partial Fisher–Yates
    /// shuffle, in draw order.
    pub fn choose_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot choose {count} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}
