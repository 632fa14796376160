// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CpError, Result};
use crate::marginals::sample_inv_gamma;
use crate::model::{ClusterProfile, GibbsState, Hyperparameters, SegmentLayout, SequenceDataset};

/// Starting point of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InitMode {
    /// Sequences spread uniformly over `clusters` single-segment profiles.
    RandomAssign { clusters: usize },
    /// Used verbatim after validation.
    Provided { state: GibbsState },
    /// The true parameters shifted by a fixed amount.
    PerturbedTruth {
        truth: GibbsState,
        delta_alpha: f64,
        delta_tau: usize,
        sigma_factor: f64,
    },
}

impl InitMode {
    pub fn perturbed(truth: GibbsState) -> Self {
        InitMode::PerturbedTruth {
            truth,
            delta_alpha: 1.5,
            delta_tau: 2,
            sigma_factor: 2.0,
        }
    }
}

fn sample_variance(row: &[f64]) -> f64 {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.max(1e-8)
}

pub fn init_state<R: Rng + ?Sized>(
    data: &SequenceDataset,
    hyper: &Hyperparameters,
    mode: &InitMode,
    rng: &mut R,
) -> Result<GibbsState> {
    let (n, m) = (data.num_sequences(), data.num_locations());
    hyper.validate_for(m)?;
    let state = match mode {
        InitMode::RandomAssign { clusters } => {
            if *clusters == 0 {
                return Err(CpError::InvalidState("need at least one initial cluster".into()));
            }
            let raw: Vec<usize> = (0..n).map(|_| rng.random_range(0..*clusters)).collect();
            // Compact labels so that no cluster is empty.
            let mut map = vec![usize::MAX; *clusters];
            let mut next = 0;
            let assignments: Vec<usize> = raw
                .iter()
                .map(|&c| {
                    if map[c] == usize::MAX {
                        map[c] = next;
                        next += 1;
                    }
                    map[c]
                })
                .collect();
            let layout = SegmentLayout::single(hyper.w, m)?;
            let profiles = (0..next)
                .map(|r| {
                    let (sum, count) = assignments
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c == r)
                        .fold((0.0, 0usize), |(s, k), (i, _)| {
                            (s + data.row(i).iter().sum::<f64>(), k + m)
                        });
                    ClusterProfile::new(layout.clone(), vec![sum / count as f64])
                })
                .collect::<Result<Vec<_>>>()?;
            GibbsState {
                assignments,
                profiles,
                sigma2: data.rows().map(sample_variance).collect(),
                lambda: 1.0,
                alpha0: 1.0,
            }
        }
        InitMode::Provided { state } => state.clone(),
        InitMode::PerturbedTruth {
            truth,
            delta_alpha,
            delta_tau,
            sigma_factor,
        } => {
            truth.validate(n, m)?;
            let profiles = truth
                .profiles
                .iter()
                .map(|p| perturb_profile(p, *delta_alpha, *delta_tau))
                .collect::<Result<Vec<_>>>()?;
            let sigma2 = truth
                .sigma2
                .iter()
                .map(|&s| sample_inv_gamma(3.0, 2.0 * sigma_factor * s, rng))
                .collect();
            GibbsState {
                assignments: truth.assignments.clone(),
                profiles,
                sigma2,
                lambda: truth.lambda,
                alpha0: truth.alpha0,
            }
        }
    };
    state.validate(n, m)?;
    Ok(state)
}

/// Levels shifted by `delta_alpha`; change points shifted right by
/// `delta_tau` and clamped so every segment keeps length at least `w`.
fn perturb_profile(p: &ClusterProfile, delta_alpha: f64, delta_tau: usize) -> Result<ClusterProfile> {
    let (m, w) = (p.layout.len, p.layout.min_len);
    let k = p.layout.num_change_points();
    let mut prev = 1;
    let mut cps = Vec::with_capacity(k);
    for (l, &t) in p.layout.change_points().iter().enumerate() {
        let hi = m - (k - l) * w;
        let t = (t + delta_tau).clamp(prev + w, hi);
        cps.push(t);
        prev = t;
    }
    let layout = SegmentLayout::from_change_points(&cps, w, m)?;
    ClusterProfile::new(layout, p.levels.iter().map(|a| a + delta_alpha).collect())
}
