//! Reproducible random substreams.
//!
//! Every random quantity is drawn from a ChaCha8 stream selected by
//! `(seed, domain, index)`. The key is `(seed, domain)` and the ChaCha stream
//! id is `index`, so replicate `i` always sees the same uniforms regardless of
//! how replicates are scheduled across threads. Within a substream draws are
//! positional: the `j`-th uniform is a function of the block counter only.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Separates unrelated consumers of one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Host = 1,
    Path = 2,
    Kernel = 3,
    Misc = 4,
}

pub struct Substream {
    inner: ChaCha8Rng,
}

impl Substream {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(index);
        Self { inner }
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn fill_uniform(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.uniform();
        }
    }

    /// Uniform integer in `0..bound` (`bound > 0`), by rejection.
    pub fn below(&mut self, bound: u64) -> u64 {
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.inner.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Standard normal by Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u = self.uniform();
        let v = self.uniform();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}
