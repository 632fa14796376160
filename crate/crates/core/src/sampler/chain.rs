// SPDX-License-Identifier: MIT OR Apache-2.0

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GibbsSampler, SamplerCounters, SamplerOptions};
use crate::error::{CpError, Result};
use crate::model::{GibbsState, Hyperparameters, SequenceDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub iters: usize,
    pub burnin_frac: f64,
    pub stride: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iters: 5000,
            burnin_frac: 0.5,
            stride: 25,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burnin_frac) {
            return Err(CpError::OutOfRange(format!(
                "burnin fraction {} must lie in [0, 1)",
                self.burnin_frac
            )));
        }
        if self.stride == 0 {
            return Err(CpError::OutOfRange("stride must be positive".into()));
        }
        Ok(())
    }

    pub fn burnin(&self) -> usize {
        (self.iters as f64 * self.burnin_frac).floor() as usize
    }

    /// Number of snapshots a chain of this configuration keeps.
    pub fn retained(&self) -> usize {
        (self.iters - self.burnin()) / self.stride
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub seed: u64,
    pub iters: usize,
    pub burnin: usize,
    pub burnin_frac: f64,
    pub stride: usize,
    pub version: String,
    /// Excluded from determinism comparisons.
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub lambda_acceptance: f64,
    pub births: u64,
}

impl From<SamplerCounters> for ChainStats {
    fn from(c: SamplerCounters) -> Self {
        let lambda_acceptance = if c.lambda_proposed == 0 {
            0.0
        } else {
            c.lambda_accepted as f64 / c.lambda_proposed as f64
        };
        Self {
            lambda_acceptance,
            births: c.births,
        }
    }
}

/// Thinned post-burn-in snapshots of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub draws: Vec<GibbsState>,
    pub meta: ChainMeta,
    pub stats: ChainStats,
}

/// SplitMix64 finalizer over `base` and the chain index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_chain(
    data: &SequenceDataset,
    hyper: &Hyperparameters,
    options: &SamplerOptions,
    init: &GibbsState,
    config: &ChainConfig,
    seed: u64,
) -> Result<ChainOutput> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = GibbsSampler::new(data, hyper, options, &mut rng)?;
    sampler.check_state(init)?;
    let mut state = init.clone();
    let burnin = config.burnin();
    let mut draws = Vec::with_capacity(config.retained());
    for t in 1..=config.iters {
        sampler.sweep(&mut state, &mut rng)?;
        if t > burnin && (t - burnin) % config.stride == 0 {
            draws.push(state.clone());
        }
    }
    Ok(ChainOutput {
        draws,
        meta: ChainMeta {
            seed,
            iters: config.iters,
            burnin,
            burnin_frac: config.burnin_frac,
            stride: config.stride,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_secs: start.elapsed().as_secs_f64(),
        },
        stats: sampler.counters.into(),
    })
}

/// Runs independent chains on a pool of `workers` threads; output order
/// follows `inits`.
pub fn run_chains(
    data: &SequenceDataset,
    hyper: &Hyperparameters,
    options: &SamplerOptions,
    inits: &[GibbsState],
    config: &ChainConfig,
    seeds: &[u64],
    workers: usize,
) -> Result<Vec<ChainOutput>> {
    if inits.len() != seeds.len() {
        return Err(CpError::LengthMismatch {
            expected: inits.len(),
            actual: seeds.len(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CpError::InvalidState(format!("thread pool: {e}")))?;
    pool.install(|| {
        inits
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(init, &seed)| run_chain(data, hyper, options, init, config, seed))
            .collect()
    })
}
