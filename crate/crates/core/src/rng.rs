//! Counter-based uniform streams.
//!
//! A stream is identified by `(seed, stream_id, substream)`: the ChaCha8 key
//! carries `seed` and `stream_id`, the ChaCha stream number carries
//! `substream`, and the block counter is the step index. One `u64` is drawn
//! per step, so `seek(step)` jumps to any step without replaying the prefix.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const KEY_TAG: &[u8; 8] = b"merw-rng";
const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream_id: u64, substream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&stream_id.to_le_bytes());
        key[16..24].copy_from_slice(KEY_TAG);
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(substream);
        Self { inner }
    }

    /// Position the stream so the next draw is the `step`-th `u64`.
    pub fn seek(&mut self, step: u64) {
        self.inner.set_word_pos(2 * step as u128);
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        u64_to_unit(self.next_u64())
    }

    /// Exp(1) by inversion, `-ln(1 - U)`.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -(-self.uniform()).ln_1p()
    }

    /// Uniform integer in [0, n) by multiply-shift.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

#[inline]
pub fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * TWO_POW_M53
}
