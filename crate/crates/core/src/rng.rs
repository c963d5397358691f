//! Counter-based random streams.
//!
//! Every Monte Carlo sample draws from its own ChaCha8 stream keyed by
//! `(seed, stream id)`; within a stream the ChaCha block counter plays the
//! role of the draw counter. Results therefore depend only on the seed and
//! on sample numbering, never on how samples are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> SampleRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// A family of streams sharing one seed, partitioned by a domain tag.
///
/// Stream ids are `domain << 40 | sample`, so up to 2^40 samples per
/// domain and 2^24 domains per seed never collide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamFamily {
    pub seed: u64,
    pub domain: u32,
}

impl StreamFamily {
    pub fn new(seed: u64, domain: u32) -> Self {
        StreamFamily { seed, domain }
    }

    pub fn stream(&self, sample: u64) -> RngStream {
        debug_assert!(sample < 1 << 40);
        RngStream::new(self.seed, (self.domain as u64) << 40 | sample)
    }

    pub fn rng(&self, sample: u64) -> SampleRng {
        self.stream(sample).rng()
    }

    /// A disjoint family for a sub-experiment.
    pub fn child(&self, tag: u32) -> StreamFamily {
        StreamFamily::new(self.seed, self.domain.wrapping_mul(0x9E37).wrapping_add(tag + 1) & 0xFF_FFFF)
    }
}
