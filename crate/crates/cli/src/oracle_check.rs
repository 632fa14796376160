// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sampler output against exact enumeration on tiny instances.

use std::collections::BTreeMap;

use cpclust::diagnostics::{canonical_labels, relabel_state};
use cpclust::oracle::{
    crp_log_prob, empirical, exact_partition_posterior, exact_segmentation_posterior, set_partitions,
    tv_distance,
};
use cpclust::sampler::LikelihoodMode;
use cpclust::{
    run_chain, ChainConfig, ClusterProfile, GibbsState, Hyperparameters, SamplerOptions, SegmentLayout,
    SequenceDataset,
};

use crate::error::{CliError, CliResult, Context};

pub const TV_TOLERANCE: f64 = 0.05;
pub const Z_TOLERANCE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Segmentation,
    Partition,
    Crp,
    All,
}

pub struct Check {
    pub name: &'static str,
    pub statistic: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value < self.limit
    }
}

fn one_cluster(n: usize, layout: SegmentLayout, sigma2: f64) -> GibbsState {
    let k1 = layout.num_segments();
    GibbsState {
        assignments: vec![0; n],
        profiles: vec![ClusterProfile::new(layout, vec![0.0; k1]).expect("valid")],
        sigma2: vec![sigma2; n],
        lambda: 1.0,
        alpha0: 1.0,
    }
}

fn only(steps: [bool; 5], mode: LikelihoodMode) -> SamplerOptions {
    SamplerOptions {
        mode,
        update_assignments: steps[0],
        update_sigma2: steps[1],
        update_profiles: steps[2],
        update_lambda: steps[3],
        update_alpha0: steps[4],
        ..SamplerOptions::default()
    }
}

/// Every sweep after a 5% burn-in.
fn chain(draws: usize) -> ChainConfig {
    let burn = (draws / 20).max(100);
    ChainConfig {
        iters: draws + burn,
        burnin_frac: burn as f64 / (draws + burn) as f64,
        stride: 1,
    }
}

fn segmentation(draws: usize, seed: u64) -> CliResult<Check> {
    let y = vec![0.2, -0.1, 0.9, 1.3, 0.4, 1.1, 0.8];
    let data = SequenceDataset::from_rows(vec![y.clone()]).runtime()?;
    let h = Hyperparameters::default().with_min_len(2);
    let exact: BTreeMap<Vec<usize>, f64> = exact_segmentation_posterior(&y, &h, 1.0)
        .runtime()?
        .into_iter()
        .map(|(l, p)| (l.tau, p))
        .collect();
    let opts = only([false, true, true, false, false], LikelihoodMode::Marginal);
    let init = one_cluster(1, SegmentLayout::single(2, 7).runtime()?, 0.3);
    let out = run_chain(&data, &h, &opts, &init, &chain(draws), seed).runtime()?;
    let got = empirical(out.draws.iter().map(|d| d.profiles[0].layout.tau.clone()));
    Ok(Check {
        name: "segmentation",
        statistic: "TV",
        value: tv_distance(&got, &exact),
        limit: TV_TOLERANCE,
    })
}

fn partition(draws: usize, seed: u64) -> CliResult<Check> {
    // two step profiles and a flat one, with fixed pseudo-noise
    let wiggle = |i: usize, b: usize| 0.4 * ((7 * i + 3 * b) as f64).sin();
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..12)
                .map(|b| {
                    let base = if i == 2 { 0.5 } else if b < 6 { 0.0 } else { 1.0 };
                    base + wiggle(i, b)
                })
                .collect()
        })
        .collect();
    let data = SequenceDataset::from_rows(rows).runtime()?;
    let h = Hyperparameters::default().with_min_len(3);
    let s2 = 0.25;
    let refs: Vec<&[f64]> = data.rows().collect();
    let post = exact_partition_posterior(&refs, &h, &[s2; 3], 1.0, 1.0).runtime()?;
    let opts = only([true, false, true, false, false], LikelihoodMode::FixedVariance);
    let init = one_cluster(3, SegmentLayout::single(3, 12).runtime()?, s2);
    let out = run_chain(&data, &h, &opts, &init, &chain(draws), seed).runtime()?;
    let joint = empirical(out.draws.iter().map(|d| {
        let c = relabel_state(d);
        (c.assignments, c.profiles.into_iter().map(|p| p.layout).collect::<Vec<_>>())
    }));
    Ok(Check {
        name: "partition",
        statistic: "TV",
        value: tv_distance(&joint, &post.joint()),
        limit: TV_TOLERANCE,
    })
}

fn batch_se(xs: &[f64], batches: usize) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let means: Vec<f64> = xs.chunks_exact(xs.len() / batches).map(mean).collect();
    let mu = mean(&means);
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (var / means.len() as f64).sqrt()
}

fn crp(draws: usize, seed: u64) -> CliResult<Check> {
    let data = SequenceDataset::from_rows(vec![vec![0.0; 8]; 3]).runtime()?;
    let h = Hyperparameters::default().with_min_len(2);
    let opts = only([true, false, false, false, false], LikelihoodMode::PriorOnly);
    let init = one_cluster(3, SegmentLayout::single(2, 8).runtime()?, 1.0);
    let out = run_chain(&data, &h, &opts, &init, &chain(draws), seed).runtime()?;
    let labels: Vec<Vec<usize>> = out.draws.iter().map(|d| canonical_labels(&d.assignments)).collect();
    let mut worst: f64 = 0.0;
    for p in set_partitions(3) {
        let target = crp_log_prob(&p, 1.0).exp();
        let ind: Vec<f64> = labels.iter().map(|d| f64::from(u8::from(*d == p))).collect();
        let freq = ind.iter().sum::<f64>() / ind.len() as f64;
        worst = worst.max((freq - target).abs() / batch_se(&ind, 100));
    }
    Ok(Check {
        name: "crp",
        statistic: "max z",
        value: worst,
        limit: Z_TOLERANCE,
    })
}

pub fn run(suite: Suite, draws: Option<usize>, seed: u64) -> CliResult<Vec<Check>> {
    if draws.is_some_and(|d| d < 1000) {
        return Err(CliError::Config("--draws must be at least 1000".into()));
    }
    let mut out = Vec::new();
    if matches!(suite, Suite::Segmentation | Suite::All) {
        out.push(segmentation(draws.unwrap_or(20_000), seed)?);
    }
    if matches!(suite, Suite::Partition | Suite::All) {
        out.push(partition(draws.unwrap_or(50_000), seed)?);
    }
    if matches!(suite, Suite::Crp | Suite::All) {
        out.push(crp(draws.unwrap_or(100_000), seed)?);
    }
    Ok(out)
}
