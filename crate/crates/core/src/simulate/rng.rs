//! Reproducible, splittable random streams keyed by `(seed, stream id)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator used by every sampler in this crate.
pub type SimRng = ChaCha8Rng;

/// A `(seed, stream)` key; the same key always yields the same draws.
///
/// Streams are ChaCha8 stream ids under one key, so distinct ids never share
/// keystream blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child stream `i`, used to partition parallel work.
    pub fn split(&self, i: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(i.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
