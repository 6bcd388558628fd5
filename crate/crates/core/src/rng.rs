//! The documented random stream shared by matching and synthesis.
//!
//! The generator is xoshiro256** seeded through SplitMix64 from a single
//! `u64`. Bounded integers use Lemire's multiply-and-reject method, so every
//! draw is unbiased and the stream consumption is fully specified: one `u64`
//! per attempt, with rejection only when the low product word falls below
//! `2^64 mod n`.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

/// Name echoed into every report.
pub const PRNG_NAME: &str = "xoshiro256** (SplitMix64 seeding, Lemire bounded draws)";

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: Xoshiro256StarStar,
}

impl StreamRng {
    pub fn from_seed(seed: u64) -> Self {
        StreamRng {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Advances this stream by 2^128 draws, giving a non-overlapping
    /// substream. Used to split one seed into independent generators.
    pub fn jump(&mut self) {
        self.inner.jump();
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "bounded draw over an empty range");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Uniform real in `[0, 1)` from the top 53 bits of one draw.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fisher-Yates shuffle driven by [`StreamRng::below`].
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for StreamRng {
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
