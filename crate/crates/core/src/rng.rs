//! Seeded random streams.
//!
//! One master seed feeds a ChaCha8 key; each consumer gets its own stream
//! number on that key, so draws in one substream never shift another.
//! Every draw in the crate goes through the helpers below, which fixes the
//! mapping from raw words to values:
//!
//! * `unit()` is `rand`'s standard `f64` in `[0, 1)` (53 random bits).
//! * `uniform(lo, hi)` is `lo + (hi - lo) * unit()`.
//! * `chance(p)` is `unit() < p`, so `p = 0` never fires and `p = 1` always does.
//! * `shuffle` is a Fisher-Yates pass from the back using `index(i + 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named substreams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    InitTraits,
    InitOpinions,
    InitEdges,
    Schedule,
    Injection,
}

impl Substream {
    fn id(self) -> u64 {
        match self {
            Substream::InitTraits => 1,
            Substream::InitOpinions => 2,
            Substream::InitEdges => 3,
            Substream::Schedule => 4,
            Substream::Injection => 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn substream(seed: u64, stream: Substream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream.id());
        SimRng { inner }
    }

    #[inline]
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Uniform index in `0..bound`.
    #[inline]
    pub fn index(&mut self, bound: usize) -> usize {
        self.inner.gen_range(0..bound)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
