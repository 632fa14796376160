// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON run configuration and command-line overrides.

use cpclust::sampler::derive_seed;
use cpclust::simulate::{MedianWindow, ScenarioSpec};
use cpclust::{ChainConfig, Hyperparameters, InitMode, SamplerOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

/// Everything a fit needs besides the data. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub hyper: Hyperparameters,
    pub chain: ChainConfig,
    pub chains: usize,
    pub seed_base: u64,
    /// Explicit per-chain seeds; derived from `seed_base` when absent.
    pub seeds: Option<Vec<u64>>,
    pub init: InitMode,
    pub sampler: SamplerOptions,
    pub window: MedianWindow,
    /// Thread count; 0 uses every available core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hyper: Hyperparameters::default(),
            chain: ChainConfig::default(),
            chains: 2,
            seed_base: 1,
            seeds: None,
            init: InitMode::RandomAssign { clusters: 2 },
            sampler: SamplerOptions::default(),
            window: MedianWindow::Off,
            workers: 0,
        }
    }
}

/// Flags that replace config values when given.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Worker threads (0 = all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed_base: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Burn-in as a fraction of iterations
    #[arg(long)]
    pub burnin: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// off, block:k, roll:k or roll:k/s
    #[arg(long)]
    pub window: Option<MedianWindow>,
    /// Cap on the number of change points
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub composition_budget: Option<usize>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = o.seed_base {
            self.seed_base = v;
            self.seeds = None;
        }
        if let Some(v) = o.chains {
            self.chains = v;
        }
        if let Some(v) = o.iters {
            self.chain.iters = v;
        }
        if let Some(v) = o.burnin {
            self.chain.burnin_frac = v;
        }
        if let Some(v) = o.stride {
            self.chain.stride = v;
        }
        if let Some(v) = o.window {
            self.window = v;
        }
        if let Some(v) = o.kmax {
            self.hyper.k_max_override = Some(v);
        }
        if let Some(v) = o.composition_budget {
            self.hyper.composition_budget = v;
        }
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> CliResult<()> {
        self.hyper.validate().config()?;
        self.chain.validate().config()?;
        self.sampler.validate().config()?;
        if self.chains == 0 {
            return Err(CliError::Config("chains must be at least 1".into()));
        }
        if let Some(s) = &self.seeds {
            if s.len() != self.chains {
                return Err(CliError::Config(format!(
                    "{} seeds given for {} chains",
                    s.len(),
                    self.chains
                )));
            }
        }
        Ok(())
    }

    pub fn chain_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.chains as u64).map(|c| derive_seed(self.seed_base, c)).collect(),
        }
    }

    pub fn worker_count(&self) -> usize {
        resolve_workers(self.workers)
    }
}

pub fn resolve_workers(w: usize) -> usize {
    if w > 0 {
        w
    } else {
        std::thread::available_parallelism().map_or(1, usize::from)
    }
}

/// `simulate` input: a preset or an explicit scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// `scenario1`, `scenario2` or `scenario3`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub spec: Option<ScenarioSpec>,
    #[serde(default = "one")]
    pub datasets: usize,
    #[serde(default)]
    pub seed_base: u64,
}

fn one() -> usize {
    1
}

impl SimulateConfig {
    pub fn scenario(&self) -> CliResult<ScenarioSpec> {
        scenario_from(self.preset.as_deref(), self.n, self.m, self.spec.as_ref())
    }
}

pub fn scenario_from(
    preset: Option<&str>,
    n: Option<usize>,
    m: Option<usize>,
    spec: Option<&ScenarioSpec>,
) -> CliResult<ScenarioSpec> {
    match (preset, spec) {
        (Some(p), None) => ScenarioSpec::preset(p, n, m).config(),
        (None, Some(s)) => Ok(s.clone()),
        _ => Err(CliError::Config("give exactly one of `preset` and `spec`".into())),
    }
}

/// One row of a bench grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub name: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub spec: Option<ScenarioSpec>,
    pub datasets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenarios: Vec<GridEntry>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub seed_base: u64,
}
