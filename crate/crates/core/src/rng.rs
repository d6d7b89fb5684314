//! The single random stream owned by a world.
//!
//! Every stochastic decision in a tick goes through [`SimRng`], and each
//! helper consumes a fixed number of draws so that the draw order can be
//! reproduced by anyone holding the same seed:
//!
//! * [`SimRng::unit`] consumes one `f64` draw in `[0, 1)`.
//! * [`SimRng::below`] consumes one `gen_range(0..n)` draw.
//! * [`SimRng::in_range`] consumes one `gen_range(min..=max)` draw.
//! * [`SimRng::pick`] is a partial Fisher-Yates shuffle: for position `i` in
//!   `0..k` it draws `gen_range(i..n)` and swaps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::config::CountRange;

#[derive(Debug, Clone, PartialEq)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn seeded(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Copy of the underlying generator at its current position.
    pub fn generator(&self) -> ChaCha8Rng {
        self.inner.clone()
    }

    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn in_range(&mut self, range: CountRange) -> usize {
        self.inner.gen_range(range.min..=range.max) as usize
    }

    /// Chooses `min(k, items.len())` distinct elements; the result is sorted
    /// ascending so callers iterate chosen agents by id.
    pub fn pick<T: Copy + Ord>(&mut self, items: &[T], k: usize) -> Vec<T> {
        let mut pool = items.to_vec();
        let n = pool.len();
        let k = k.min(n);
        for i in 0..k {
            let j = self.inner.gen_range(i..n);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}
