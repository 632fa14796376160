// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fitting a dataset and persisting or re-reading a run directory.

use std::path::{Path, PathBuf};

use cpclust::diagnostics::{rhat_table, summarize, PosteriorSummary, RhatEntry, ScalarSummary};
use cpclust::sampler::{derive_seed, ChainStats};
use cpclust::simulate::preprocess;
use cpclust::{init_state, run_chains, ChainOutput, GibbsState, SequenceDataset};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Context};
use crate::io::{fmt_opt, read_json, write_json, write_table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a run directory records about how it was produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub version: String,
    pub data: String,
    pub sequences: usize,
    pub locations_raw: usize,
    /// Length after the moving-median window.
    pub locations: usize,
    pub seeds: Vec<u64>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub chains: usize,
    pub posterior: PosteriorSummary,
    pub rhat: Vec<RhatEntry>,
    pub max_rhat: Option<f64>,
    pub stats: Vec<ChainStats>,
}

pub struct Fit {
    pub data: SequenceDataset,
    pub seeds: Vec<u64>,
    pub chains: Vec<ChainOutput>,
}

/// Preprocessed data with one initial state per chain seed.
pub struct Prepared {
    pub data: SequenceDataset,
    pub seeds: Vec<u64>,
    pub inits: Vec<GibbsState>,
}

/// The init draw for a chain uses `derive_seed(chain_seed, 0)` so it never
/// shares a stream with the sampler.
pub fn prepare(raw: &SequenceDataset, cfg: &RunConfig) -> CliResult<Prepared> {
    cfg.validate()?;
    let data = preprocess(raw, cfg.window).config()?;
    cfg.hyper.validate_for(data.num_locations()).config()?;
    let seeds = cfg.chain_seeds();
    let inits = seeds
        .iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s, 0));
            init_state(&data, &cfg.hyper, &cfg.init, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()
        .config()?;
    Ok(Prepared { data, seeds, inits })
}

pub fn fit(raw: &SequenceDataset, cfg: &RunConfig, workers: usize) -> CliResult<Fit> {
    let p = prepare(raw, cfg)?;
    let chains = run_chains(&p.data, &cfg.hyper, &cfg.sampler, &p.inits, &cfg.chain, &p.seeds, workers).runtime()?;
    Ok(Fit {
        data: p.data,
        seeds: p.seeds,
        chains,
    })
}

pub fn chain_path(dir: &Path, c: usize) -> PathBuf {
    dir.join(format!("chain_{c}.json"))
}

/// Writes chain files with the wall clock moved to `timing.csv`, so every
/// other file is a pure function of data, config and seeds.
pub fn write_chains(dir: &Path, chains: &[ChainOutput]) -> CliResult<()> {
    let mut timing = Vec::new();
    for (c, out) in chains.iter().enumerate() {
        let mut out = out.clone();
        timing.push(vec![
            c.to_string(),
            out.meta.seed.to_string(),
            out.meta.wall_clock_secs.to_string(),
            out.stats.lambda_acceptance.to_string(),
            out.stats.births.to_string(),
        ]);
        out.meta.wall_clock_secs = 0.0;
        write_json(&chain_path(dir, c), &out)?;
    }
    write_table(
        &dir.join("timing.csv"),
        &["chain", "seed", "seconds", "lambda_acceptance", "births"],
        &timing,
    )
}

pub fn read_chains(dir: &Path) -> CliResult<Vec<ChainOutput>> {
    let mut chains = Vec::new();
    while chain_path(dir, chains.len()).is_file() {
        chains.push(read_json(&chain_path(dir, chains.len()))?);
    }
    if chains.is_empty() {
        return Err(CliError::Data(format!("{}: no chain_0.json", dir.display())));
    }
    Ok(chains)
}

pub fn summarize_chains(chains: &[ChainOutput], truth: Option<&GibbsState>) -> CliResult<RunSummary> {
    let pooled: Vec<GibbsState> = chains.iter().flat_map(|c| c.draws.iter().cloned()).collect();
    if let (Some(t), Some(d)) = (truth, pooled.first()) {
        if t.assignments.len() != d.assignments.len() {
            return Err(CliError::Data(format!(
                "truth has {} sequences, run has {}",
                t.assignments.len(),
                d.assignments.len()
            )));
        }
    }
    let posterior = summarize(&pooled, truth).runtime()?;
    let rhat = if chains.len() >= 2 {
        rhat_table(chains).runtime()?
    } else {
        Vec::new()
    };
    let max_rhat = rhat.iter().filter_map(|e| e.rhat).reduce(f64::max);
    Ok(RunSummary {
        version: VERSION.to_string(),
        chains: chains.len(),
        posterior,
        rhat,
        max_rhat,
        stats: chains.iter().map(|c| c.stats).collect(),
    })
}

fn stat_row(parameter: &str, seq: String, cluster: String, segment: String, s: &ScalarSummary, truth: Option<f64>) -> Vec<String> {
    vec![
        parameter.to_string(),
        seq,
        cluster,
        segment,
        s.mean.to_string(),
        s.se.to_string(),
        s.ci_low.to_string(),
        s.ci_high.to_string(),
        s.ci_width().to_string(),
        fmt_opt(truth),
    ]
}

/// `summary.json`, `summary.csv`, `clusters.csv` and `rhat.csv`. Indices in
/// the CSV tables are 1-based.
pub fn write_summary(dir: &Path, s: &RunSummary, truth: Option<&GibbsState>) -> CliResult<()> {
    write_json(&dir.join("summary.json"), s)?;
    let p = &s.posterior;
    let none = String::new;
    let mut rows = vec![
        stat_row("lambda", none(), none(), none(), &p.lambda, None),
        stat_row("alpha0", none(), none(), none(), &p.alpha0, None),
    ];
    for (i, v) in p.sigma2.iter().enumerate() {
        rows.push(stat_row("sigma2", (i + 1).to_string(), none(), none(), v, truth.map(|t| t.sigma2[i])));
    }
    let mut clusters = Vec::new();
    for (r, c) in p.clusters.iter().enumerate() {
        let true_levels = truth
            .zip(c.truth_cluster)
            .map(|(t, tc)| &t.profiles[tc])
            .filter(|tp| tp.layout.change_points() == c.change_points_mode.as_slice())
            .map(|tp| tp.levels.clone());
        for (l, v) in c.levels.iter().enumerate() {
            let t = true_levels.as_ref().map(|lv| lv[l]);
            rows.push(stat_row("level", none(), (r + 1).to_string(), (l + 1).to_string(), v, t));
        }
        let join = |xs: &[usize], shift: usize| xs.iter().map(|x| (x + shift).to_string()).collect::<Vec<_>>().join(" ");
        clusters.push(vec![
            (r + 1).to_string(),
            c.members.len().to_string(),
            join(&c.members, 1),
            c.k_mode.to_string(),
            join(&c.change_points_mode, 0),
            c.layout_frequency.to_string(),
            c.truth_cluster.map(|t| (t + 1).to_string()).unwrap_or_default(),
        ]);
    }
    write_table(
        &dir.join("summary.csv"),
        &["parameter", "sequence", "cluster", "segment", "mean", "se", "ci_low", "ci_high", "ci_width", "truth"],
        &rows,
    )?;
    write_table(
        &dir.join("clusters.csv"),
        &["cluster", "size", "members", "k_mode", "change_points", "layout_frequency", "truth_cluster"],
        &clusters,
    )?;
    let rhat: Vec<Vec<String>> = s.rhat.iter().map(|e| vec![e.name.clone(), fmt_opt(e.rhat)]).collect();
    write_table(&dir.join("rhat.csv"), &["functional", "rhat"], &rhat)
}
