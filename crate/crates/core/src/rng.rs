//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a [`StreamKey`]: the triple
//! `(seed, stream, replicate)` selects an independent ChaCha8 substream, so a
//! replicate produces the same numbers no matter which worker runs it or in
//! what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Stream used for null-distribution tables, kept apart from per-`n` data streams.
pub const NULL_TABLE_STREAM: u64 = 0xC7A1_0000_0000_0001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
    pub replicate: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64, replicate: u64) -> Self {
        Self {
            seed,
            stream,
            replicate,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.replicate);
        rng
    }
}

/// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let bits = rng.random::<u64>() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}
