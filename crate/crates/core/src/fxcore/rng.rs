use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic random source for stochastic rounding.
///
/// Backed by ChaCha8 (`rand_chacha`), whose output is fixed by its
/// specification and identical on every platform. The key is expanded from a
/// 64-bit seed with `SeedableRng::seed_from_u64`; independent per-image streams
/// come from ChaCha's 64-bit stream id, so `derive(seed, i)` never overlaps
/// `derive(seed, j)` for `i != j`.
///
/// A stream is not meant to be shared between threads: clone or derive one
/// per worker.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
    /// Unused bits of the last word drawn for [`RngStream::bits`], top aligned.
    pool: u64,
    avail: u32,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::from_inner(ChaCha8Rng::seed_from_u64(seed))
    }

    /// The stream for work item `index` (an image, a test case) under `seed`.
    pub fn derive(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        Self::from_inner(inner)
    }

    fn from_inner(inner: ChaCha8Rng) -> Self {
        Self { inner, pool: 0, avail: 0 }
    }

    /// Uniform integer in `[0, 2^k)`, `k <= 128`.
    ///
    /// For `k <= 64` the bits come from a 64-bit word that is consumed from
    /// the top, `k` bits per call, and replaced when fewer than `k` remain;
    /// no bit is used twice. Wider requests take two fresh words. `k = 0`
    /// consumes nothing and returns 0.
    #[inline]
    pub fn bits(&mut self, k: u32) -> u128 {
        match k {
            0 => 0,
            1..=64 => {
                if self.avail < k {
                    self.pool = self.inner.next_u64();
                    self.avail = 64;
                }
                let r = self.pool >> (64 - k);
                self.pool = self.pool.checked_shl(k).unwrap_or(0);
                self.avail -= k;
                r as u128
            }
            _ => {
                let hi = self.inner.next_u64() as u128;
                let lo = self.inner.next_u64() as u128;
                ((hi << 64) | lo) >> (128 - k)
            }
        }
    }

    /// Uniform real in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (-53f64).exp2()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}
