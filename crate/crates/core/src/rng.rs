//! Per-replicate random streams.
//!
//! A stream is identified by `(seed, stream_id)`. The generator is ChaCha8,
//! whose stream parameter selects an independent keystream, so the draws of
//! replicate `i` do not depend on which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// The generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream `i` of a family that shares this stream's seed.
    ///
    /// The family is keyed by this stream's id so that nested experiments
    /// (e.g. replicate `i` of configuration `c`) stay disjoint.
    pub fn child(&self, i: u64) -> RandomStream {
        let mixed = splitmix64(self.stream_id ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i.wrapping_add(1)));
        RandomStream::new(self.seed, mixed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
