//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by a master seed and addressed by
//! a 64-bit stream id, so any `(master, trial, lane)` triple yields the same
//! draws on every platform and no two triples overlap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lane of the shared return stream inside a trial.
pub const RETURNS_LANE: u16 = 0;

#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
    draws: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Stream for `lane` of trial `trial` under `master`.
    ///
    /// The stream id packs the trial index in the upper 48 bits and the lane
    /// in the lower 16.
    pub fn derive(master: u64, trial: u64, lane: u16) -> Self {
        debug_assert!(trial < 1 << 48, "trial index exceeds 48 bits");
        Self::with_stream(master, (trial << 16) | u64::from(lane))
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            seed,
            stream,
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of primitive draws taken so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform on [0, 1).
    pub fn unit(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// The noise variable ξ, uniform on [-1, 1).
    pub fn signed_unit(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }

    /// Uniform on the open interval (lo, hi); endpoint hits are redrawn.
    pub fn open_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        loop {
            let v = lo + (hi - lo) * self.unit();
            if v > lo && v < hi {
                return v;
            }
        }
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty index range");
        self.draws += 1;
        self.rng.random_range(0..n)
    }

    /// Bernoulli trial; `chance(0.0)` is never true and `chance(1.0)` always is.
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}
