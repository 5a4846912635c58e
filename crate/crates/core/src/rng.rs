//! Seeded random streams.
//!
//! Every stream is ChaCha8 keyed by a 64-bit seed (expanded with
//! `seed_from_u64`, i.e. PCG32 output), with the ChaCha stream id selecting an
//! independent sub-sequence. Draws are platform independent: floats use the
//! top 53 bits of a `u64`, and bounded integers are sampled in `u64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream `stream` under the master `seed`.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    /// Uniform in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        self.0.gen_range(0..n as u64) as usize
    }
}
