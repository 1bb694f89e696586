//! Seedable, bit-exact random streams.
//!
//! Every stream is a xoshiro256++ generator whose 256-bit state is filled
//! with four consecutive outputs of SplitMix64 started at the stream seed.
//! Child streams for parallel replication are derived by hashing
//! `(master_seed, index)` with the SplitMix64 finalizer, so the seed of
//! every job depends only on its position in the job list, never on
//! scheduling.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function (Steele, Lea and Flood).
#[inline]
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let a = splitmix64_mix(master.wrapping_add(GOLDEN_GAMMA));
    splitmix64_mix(a ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// A single-owner random stream. Clone it only to replay a sequence.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut bytes = [0u8; 32];
        let mut sm = seed;
        for chunk in bytes.chunks_exact_mut(8) {
            sm = sm.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&splitmix64_mix(sm).to_le_bytes());
        }
        Self {
            seed,
            inner: Xoshiro256PlusPlus::from_seed(bytes),
        }
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream number `index` derived from this stream's seed.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream::new(derive_seed(self.seed, index))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, bound)` (Lemire's multiply-and-reject).
    ///
    /// Panics if `bound == 0`.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
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
