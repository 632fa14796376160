// SPDX-License-Identifier: MIT OR Apache-2.0

//! Convergence checks, clustering quality, label-switching correction and
//! posterior summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CpError, Result};
use crate::model::{GibbsState, SegmentLayout};
use crate::sampler::ChainOutput;

/// Minimum draws per chain accepted by [`gelman_rubin`].
pub const MIN_RHAT_DRAWS: usize = 10;

/// Potential scale reduction factor. Returns `None` when every chain has
/// zero within-chain variance.
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<Option<f64>> {
    let m = chains.len();
    if m < 2 {
        return Err(CpError::OutOfRange("need at least two chains".into()));
    }
    let n = chains[0].len();
    if n < MIN_RHAT_DRAWS {
        return Err(CpError::OutOfRange(format!(
            "need at least {MIN_RHAT_DRAWS} draws per chain, got {n}"
        )));
    }
    if let Some(c) = chains.iter().find(|c| c.len() != n) {
        return Err(CpError::LengthMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = nf / (m as f64 - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    if w <= 0.0 {
        return Ok(None);
    }
    let v = (nf - 1.0) / nf * w + (1.0 + 1.0 / m as f64) * b / nf;
    Ok(Some((v / w).sqrt()))
}

/// Labels renumbered by order of first appearance, so two labelings of the
/// same set partition compare equal.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VMeasure {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v: f64,
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Homogeneity, completeness and their harmonic mean.
pub fn v_measure_parts(truth: &[usize], pred: &[usize]) -> Result<VMeasure> {
    if truth.is_empty() {
        return Err(CpError::OutOfRange("empty labeling".into()));
    }
    if truth.len() != pred.len() {
        return Err(CpError::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let n = truth.len() as f64;
    let t = canonical_labels(truth);
    let p = canonical_labels(pred);
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ct: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cp: BTreeMap<usize, usize> = BTreeMap::new();
    for (&a, &b) in t.iter().zip(&p) {
        *joint.entry((a, b)).or_default() += 1;
        *ct.entry(a).or_default() += 1;
        *cp.entry(b).or_default() += 1;
    }
    let h_c = entropy(ct.values().copied(), n);
    let h_k = entropy(cp.values().copied(), n);
    // H(C|K) = -sum n_ck/n log(n_ck / n_k)
    let h_c_given_k: f64 = joint
        .iter()
        .map(|(&(_, k), &c)| -(c as f64 / n) * (c as f64 / cp[&k] as f64).ln())
        .sum();
    let h_k_given_c: f64 = joint
        .iter()
        .map(|(&(cl, _), &c)| -(c as f64 / n) * (c as f64 / ct[&cl] as f64).ln())
        .sum();
    let homogeneity = if h_c == 0.0 { 1.0 } else { 1.0 - h_c_given_k / h_c };
    let completeness = if h_k == 0.0 { 1.0 } else { 1.0 - h_k_given_c / h_k };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(VMeasure {
        homogeneity,
        completeness,
        v,
    })
}

pub fn v_measure(truth: &[usize], pred: &[usize]) -> Result<f64> {
    Ok(v_measure_parts(truth, pred)?.v)
}

/// Draws with canonical labels and a flag marking those on the modal
/// partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Relabeled {
    pub draws: Vec<GibbsState>,
    pub on_modal: Vec<bool>,
    pub modal_partition: Vec<usize>,
    pub modal_count: usize,
}

/// Relabels every draw so clusters are ordered by smallest member index,
/// permuting the profiles to match.
pub fn relabel_state(state: &GibbsState) -> GibbsState {
    let canon = canonical_labels(&state.assignments);
    let mut order = vec![usize::MAX; state.profiles.len()];
    for (&old, &new) in state.assignments.iter().zip(&canon) {
        order[new] = old;
    }
    GibbsState {
        assignments: canon,
        profiles: order.iter().map(|&o| state.profiles[o].clone()).collect(),
        sigma2: state.sigma2.clone(),
        lambda: state.lambda,
        alpha0: state.alpha0,
    }
}

pub fn relabel(draws: &[GibbsState]) -> Result<Relabeled> {
    if draws.is_empty() {
        return Err(CpError::OutOfRange("no draws to relabel".into()));
    }
    let relabeled: Vec<GibbsState> = draws.iter().map(relabel_state).collect();
    let (modal_partition, modal_count) =
        mode_by(relabeled.iter().map(|d| d.assignments.clone()));
    let on_modal = relabeled
        .iter()
        .map(|d| d.assignments == modal_partition)
        .collect();
    Ok(Relabeled {
        draws: relabeled,
        on_modal,
        modal_partition,
        modal_count,
    })
}

/// Most frequent value; ties go to the smallest.
fn mode_by<T: Ord + Clone>(items: impl Iterator<Item = T>) -> (T, usize) {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for it in items {
        *counts.entry(it).or_default() += 1;
    }
    let mut best: Option<(T, usize)> = None;
    for (k, c) in counts {
        if best.as_ref().is_none_or(|(_, bc)| c > *bc) {
            best = Some((k, c));
        }
    }
    best.expect("nonempty")
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub mean: f64,
    pub sd: f64,
    /// Naive Monte Carlo standard error `sd / sqrt(n)`.
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl ScalarSummary {
    pub fn from_draws(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            mean,
            sd,
            se: sd / (n as f64).sqrt(),
            ci_low: quantile_sorted(&sorted, 0.025),
            ci_high: quantile_sorted(&sorted, 0.975),
            n,
        })
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    /// Sequences in the cluster (0-based).
    pub members: Vec<usize>,
    pub k_mode: usize,
    pub change_points_mode: Vec<usize>,
    /// Share of modal-partition draws with the modal layout.
    pub layout_frequency: f64,
    /// Level summaries over draws on the modal partition and modal layout.
    pub levels: Vec<ScalarSummary>,
    /// Matching true cluster by maximum overlap, when truth is supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    pub v_measure: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    /// Mean absolute deviation of posterior-mean variances from the truth.
    pub sigma2_mad: f64,
    /// `|posterior mean - truth|` for each level of each matched cluster.
    pub level_abs_errors: Vec<Vec<f64>>,
    pub change_points_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub draws: usize,
    pub lambda: ScalarSummary,
    pub alpha0: ScalarSummary,
    pub sigma2: Vec<ScalarSummary>,
    pub l_mode: usize,
    /// `(L, frequency)` pairs.
    pub l_distribution: Vec<(usize, f64)>,
    pub modal_partition: Vec<usize>,
    pub modal_partition_frequency: f64,
    pub clusters: Vec<ClusterSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthComparison>,
}

/// Summarizes pooled draws, optionally against the generating truth.
pub fn summarize(draws: &[GibbsState], truth: Option<&GibbsState>) -> Result<PosteriorSummary> {
    if draws.len() < 2 {
        return Err(CpError::OutOfRange("need at least two draws".into()));
    }
    let total = draws.len() as f64;
    let rel = relabel(draws)?;
    let lambda = ScalarSummary::from_draws(&draws.iter().map(|d| d.lambda).collect::<Vec<_>>())
        .expect("nonempty");
    let alpha0 = ScalarSummary::from_draws(&draws.iter().map(|d| d.alpha0).collect::<Vec<_>>())
        .expect("nonempty");
    let n = draws[0].sigma2.len();
    let sigma2: Vec<ScalarSummary> = (0..n)
        .map(|i| {
            ScalarSummary::from_draws(&draws.iter().map(|d| d.sigma2[i]).collect::<Vec<_>>())
                .expect("nonempty")
        })
        .collect();
    let mut l_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for d in draws {
        *l_counts.entry(d.num_clusters()).or_default() += 1;
    }
    let (l_mode, _) = mode_by(draws.iter().map(GibbsState::num_clusters));
    let l_distribution = l_counts
        .into_iter()
        .map(|(l, c)| (l, c as f64 / total))
        .collect();

    let modal: Vec<&GibbsState> = rel
        .draws
        .iter()
        .zip(&rel.on_modal)
        .filter_map(|(d, &on)| on.then_some(d))
        .collect();
    let n_clusters = modal[0].num_clusters();
    let truth_labels = truth.map(|t| canonical_labels(&t.assignments));
    let mut clusters = Vec::with_capacity(n_clusters);
    for r in 0..n_clusters {
        let members: Vec<usize> = (0..n).filter(|&i| rel.modal_partition[i] == r).collect();
        let (layout, count) = mode_by(modal.iter().map(|d| d.profiles[r].layout.clone()));
        let on_layout: Vec<&&GibbsState> = modal
            .iter()
            .filter(|d| d.profiles[r].layout == layout)
            .collect();
        let levels = (0..layout.num_segments())
            .map(|l| {
                ScalarSummary::from_draws(
                    &on_layout.iter().map(|d| d.profiles[r].levels[l]).collect::<Vec<_>>(),
                )
                .expect("nonempty")
            })
            .collect();
        let truth_cluster = truth.map(|t| {
            let mut overlap: BTreeMap<usize, usize> = BTreeMap::new();
            for &i in &members {
                *overlap.entry(t.assignments[i]).or_default() += 1;
            }
            let mut best = (0, 0);
            for (c, k) in overlap {
                if k > best.1 {
                    best = (c, k);
                }
            }
            best.0
        });
        clusters.push(ClusterSummary {
            members,
            k_mode: layout.num_change_points(),
            change_points_mode: layout.change_points().to_vec(),
            layout_frequency: count as f64 / modal.len() as f64,
            levels,
            truth_cluster,
        });
    }

    let truth = match (truth, truth_labels) {
        (Some(t), Some(tl)) => Some(compare_truth(t, &tl, &rel.modal_partition, &sigma2, &clusters)?),
        _ => None,
    };
    Ok(PosteriorSummary {
        draws: draws.len(),
        lambda,
        alpha0,
        sigma2,
        l_mode,
        l_distribution,
        modal_partition: rel.modal_partition,
        modal_partition_frequency: rel.modal_count as f64 / total,
        clusters,
        truth,
    })
}

fn compare_truth(
    truth: &GibbsState,
    truth_labels: &[usize],
    modal: &[usize],
    sigma2: &[ScalarSummary],
    clusters: &[ClusterSummary],
) -> Result<TruthComparison> {
    let vm = v_measure_parts(truth_labels, modal)?;
    if truth.sigma2.len() != sigma2.len() {
        return Err(CpError::LengthMismatch {
            expected: sigma2.len(),
            actual: truth.sigma2.len(),
        });
    }
    let sigma2_mad = truth
        .sigma2
        .iter()
        .zip(sigma2)
        .map(|(t, s)| (s.mean - t).abs())
        .sum::<f64>()
        / sigma2.len() as f64;
    let mut level_abs_errors = Vec::new();
    let mut exact = clusters.len() == truth.profiles.len();
    for c in clusters {
        let t = &truth.profiles[c.truth_cluster.expect("truth given")];
        let same_layout: &SegmentLayout = &t.layout;
        if same_layout.change_points() != c.change_points_mode.as_slice() {
            exact = false;
            level_abs_errors.push(Vec::new());
            continue;
        }
        level_abs_errors.push(
            c.levels
                .iter()
                .zip(&t.levels)
                .map(|(s, a)| (s.mean - a).abs())
                .collect(),
        );
    }
    Ok(TruthComparison {
        v_measure: vm.v,
        homogeneity: vm.homogeneity,
        completeness: vm.completeness,
        sigma2_mad,
        level_abs_errors,
        change_points_exact: exact,
    })
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhatEntry {
    pub name: String,
    pub rhat: Option<f64>,
}

/// Gelman-Rubin factors for `lambda`, `alpha0`, every variance and every
/// sequence's fitted mean level, functionals whose dimension does not
/// depend on the number of change points. Chains shorter than
/// [`MIN_RHAT_DRAWS`] give `None` throughout.
pub fn rhat_table(chains: &[ChainOutput]) -> Result<Vec<RhatEntry>> {
    if chains.len() < 2 {
        return Err(CpError::OutOfRange("need at least two chains".into()));
    }
    let n = chains[0]
        .draws
        .first()
        .map(|d| d.sigma2.len())
        .ok_or_else(|| CpError::OutOfRange("empty chain".into()))?;
    let series = |f: &dyn Fn(&GibbsState) -> f64| -> Vec<Vec<f64>> {
        chains.iter().map(|c| c.draws.iter().map(f).collect()).collect()
    };
    let short = chains.iter().any(|c| c.draws.len() < MIN_RHAT_DRAWS);
    let mut out = Vec::new();
    let mut push = |name: String, s: Vec<Vec<f64>>| -> Result<()> {
        let refs: Vec<&[f64]> = s.iter().map(Vec::as_slice).collect();
        let rhat = if short { None } else { gelman_rubin(&refs)? };
        out.push(RhatEntry { name, rhat });
        Ok(())
    };
    push("lambda".into(), series(&|d| d.lambda))?;
    push("alpha0".into(), series(&|d| d.alpha0))?;
    for i in 0..n {
        push(format!("sigma2[{}]", i + 1), series(&|d| d.sigma2[i]))?;
    }
    for i in 0..n {
        push(
            format!("fitted_mean[{}]", i + 1),
            series(&|d| d.profiles[d.assignments[i]].mean_level()),
        )?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_measure_basic_cases() {
        assert_eq!(v_measure(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(v_measure(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.0);
        assert!(v_measure(&[], &[]).is_err());
    }

    #[test]
    fn quantile_type7() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.025) - 1.075).abs() < 1e-12);
    }

    #[test]
    fn constant_draws_summary() {
        let s = ScalarSummary::from_draws(&[2.0; 10]).unwrap();
        assert_eq!((s.se, s.ci_width(), s.mean), (0.0, 0.0, 2.0));
    }

    #[test]
    fn rhat_degenerate_is_flagged() {
        let a = [1.0; 20];
        assert_eq!(gelman_rubin(&[&a, &a]).unwrap(), None);
    }
}
