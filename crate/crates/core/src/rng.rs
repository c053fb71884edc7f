//! Seedable, splittable random streams.
//!
//! Every Monte-Carlo trial gets its own ChaCha8 stream keyed by
//! `(seed, trial index)`, so results do not depend on how trials are spread
//! over worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    /// Stream number `stream` of the generator family selected by `seed`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng(inner)
    }

    /// The substream reserved for Monte-Carlo trial `trial`.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        Self::new(seed, trial)
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
