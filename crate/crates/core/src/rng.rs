//! Seeded noise source.
//!
//! ChaCha8 is a counter-based stream cipher, so the draw sequence depends
//! only on the seed: identical across platforms and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Sub-stream for one trial of a multi-trial run.
    pub fn for_trial(master_seed: u64, trial: u32) -> Self {
        Self::new(trial_seed(master_seed, trial))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

pub fn trial_seed(master_seed: u64, trial: u32) -> u64 {
    master_seed ^ u64::from(trial)
}
