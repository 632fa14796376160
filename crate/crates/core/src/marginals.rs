// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form log marginal likelihoods. The Gram matrix of the segment
//! indicator design is diagonal (segment lengths), so every quadratic form
//! reduces to per-segment sums.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::combinatorics::{spare_to_bounds, trunc_poisson_log_pmfs, LayoutCatalog};
use crate::error::{CpError, Result};
use crate::math::{ln_gamma, log_sum_exp, sample_log_categorical, LN_2PI};
use crate::model::{boundaries, ClusterProfile, Hyperparameters, SegmentLayout, SequenceStats};

fn check_len(y: &[f64], layout: &SegmentLayout) -> Result<()> {
    if y.len() != layout.len {
        return Err(CpError::LengthMismatch {
            expected: layout.len,
            actual: y.len(),
        });
    }
    Ok(())
}

/// `log_H` from prefix sums and 0-based segment boundaries.
#[inline]
pub fn log_h_from_stats(stats: &SequenceStats, bounds: &[usize], a: f64, b: f64) -> f64 {
    let m = stats.len() as f64;
    let segments = bounds.len() - 1;
    let mut resid = 0.0;
    let mut ln_det = 0.0;
    for w in bounds.windows(2) {
        let seg = stats.segment(w[0], w[1]);
        resid += seg.within_ss;
        ln_det += (seg.count as f64).ln();
    }
    let half_dof = (m - segments as f64) / 2.0;
    -half_dof * LN_2PI - 0.5 * ln_det - a * b.ln() - ln_gamma(a) + ln_gamma(half_dof + a)
        - (half_dof + a) * (resid / 2.0 + 1.0 / b).ln()
}

/// Log of the likelihood of `y` given the layout, with the segment levels
/// (flat prior) and the variance (inverse-gamma prior) integrated out.
pub fn log_h(y: &[f64], layout: &SegmentLayout, hyper: &Hyperparameters) -> Result<f64> {
    check_len(y, layout)?;
    let stats = SequenceStats::new(y);
    let v = log_h_from_stats(&stats, &boundaries(layout), hyper.a_sigma, hyper.b_sigma);
    if !v.is_finite() {
        return Err(CpError::Numerical(format!("log_H = {v}")));
    }
    Ok(v)
}

/// `log q_j` given the residual sum of squares against the cluster profile,
/// with the variance integrated out.
#[inline]
pub fn log_qj_from_rss(rss: f64, m: usize, cluster_size: usize, a: f64, b: f64) -> f64 {
    let half_m = m as f64 / 2.0;
    (cluster_size as f64).ln() + ln_gamma(half_m + a)
        - a * b.ln()
        - half_m * LN_2PI
        - ln_gamma(a)
        - (half_m + a) * (rss / 2.0 + 1.0 / b).ln()
}

/// `log q_j` conditional on a known variance.
#[inline]
pub fn log_qj_fixed(rss: f64, m: usize, cluster_size: usize, sigma2: f64) -> f64 {
    (cluster_size as f64).ln() - 0.5 * m as f64 * (LN_2PI + sigma2.ln()) - rss / (2.0 * sigma2)
}

pub fn log_qj(
    y: &[f64],
    profile: &ClusterProfile,
    hyper: &Hyperparameters,
    cluster_size: usize,
) -> Result<f64> {
    if cluster_size < 1 {
        return Err(CpError::OutOfRange("cluster_size must be at least 1".into()));
    }
    let rss = crate::model::residual_ss(y, &profile.layout, &profile.levels)?;
    Ok(log_qj_from_rss(
        rss,
        y.len(),
        cluster_size,
        hyper.a_sigma,
        hyper.b_sigma,
    ))
}

/// Precision-weighted prefix sums over the members of a cluster.
#[derive(Debug, Clone)]
pub struct GroupStats {
    shift: f64,
    m: usize,
    members: usize,
    precision: f64,
    sum_ln_sigma2: f64,
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
}

impl GroupStats {
    pub fn new(rows: &[&[f64]], sigma2: &[f64]) -> Result<Self> {
        if rows.is_empty() {
            return Err(CpError::InvalidState("empty group".into()));
        }
        if rows.len() != sigma2.len() {
            return Err(CpError::LengthMismatch {
                expected: rows.len(),
                actual: sigma2.len(),
            });
        }
        if let Some(s) = sigma2.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(CpError::OutOfRange(format!("variance {s} must be positive")));
        }
        let m = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(CpError::LengthMismatch {
                expected: m,
                actual: r.len(),
            });
        }
        let shift = rows.iter().flat_map(|r| r.iter()).sum::<f64>() / (m * rows.len()) as f64;
        let mut prefix = vec![0.0; m + 1];
        let mut prefix_sq = vec![0.0; m + 1];
        let mut precision = 0.0;
        let mut sum_ln_sigma2 = 0.0;
        for (row, &s2) in rows.iter().zip(sigma2) {
            let wt = 1.0 / s2;
            precision += wt;
            sum_ln_sigma2 += s2.ln();
            let (mut s, mut q) = (0.0, 0.0);
            for (b, v) in row.iter().enumerate() {
                let c = v - shift;
                s += c;
                q += c * c;
                prefix[b + 1] += wt * s;
                prefix_sq[b + 1] += wt * q;
            }
        }
        Ok(Self {
            shift,
            m,
            members: rows.len(),
            precision,
            sum_ln_sigma2,
            prefix,
            prefix_sq,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn members(&self) -> usize {
        self.members
    }

    /// `sum_n 1/sigma2_n`.
    pub fn precision(&self) -> f64 {
        self.precision
    }

    /// `log_Htilde` for the segmentation given by 0-based `bounds`.
    #[inline]
    pub fn log_htilde(&self, bounds: &[usize]) -> f64 {
        let segments = bounds.len() - 1;
        let mut resid = 0.0;
        let mut ln_det = 0.0;
        for w in bounds.windows(2) {
            let len = (w[1] - w[0]) as f64;
            let s = self.prefix[w[1]] - self.prefix[w[0]];
            let q = self.prefix_sq[w[1]] - self.prefix_sq[w[0]];
            resid += (q - s * s / (self.precision * len)).max(0.0);
            ln_det += len.ln();
        }
        let total_points = (self.members * self.m) as f64;
        -(total_points - segments as f64) / 2.0 * LN_2PI
            - self.m as f64 / 2.0 * self.sum_ln_sigma2
            - resid / 2.0
            - segments as f64 / 2.0 * self.precision.ln()
            - 0.5 * ln_det
    }

    /// Posterior mean and variance of each segment level.
    pub fn level_posterior(&self, bounds: &[usize]) -> Vec<(f64, f64)> {
        bounds
            .windows(2)
            .map(|w| {
                let len = (w[1] - w[0]) as f64;
                let s = self.prefix[w[1]] - self.prefix[w[0]];
                (s / (self.precision * len) + self.shift, 1.0 / (self.precision * len))
            })
            .collect()
    }
}

/// Log of the joint likelihood of a group of sequences sharing a layout,
/// with the shared segment levels integrated out under a flat prior.
pub fn log_htilde(group_y: &[&[f64]], group_sigma2: &[f64], layout: &SegmentLayout) -> Result<f64> {
    let g = GroupStats::new(group_y, group_sigma2)?;
    if g.len() != layout.len {
        return Err(CpError::LengthMismatch {
            expected: layout.len,
            actual: g.len(),
        });
    }
    Ok(g.log_htilde(&boundaries(layout)))
}

/// Per-composition log-weight used when resampling a cluster's layout.
pub fn log_v(group_y: &[&[f64]], layout: &SegmentLayout, sigma2: &[f64]) -> Result<f64> {
    Ok(log_htilde(group_y, sigma2, layout)? + crate::combinatorics::multinomial_logcoef(&layout.spare))
}

/// How the variance enters a single-sequence segmentation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceTreatment {
    /// Integrated against the inverse-gamma prior (`log_H`).
    Marginal,
    /// Held at a known value (`log_Htilde` of a one-member group).
    Known(f64),
    /// Likelihood switched off; the table reduces to the layout prior.
    Flat,
}

/// Unnormalized log-weights `log L(y | layout) + log P(m | K)` for every
/// candidate layout of one sequence, grouped by `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWeightTable {
    weights: Vec<Vec<f64>>,
    family_lse: Vec<f64>,
}

impl LogWeightTable {
    pub fn build(
        y: &[f64],
        catalog: &LayoutCatalog,
        hyper: &Hyperparameters,
        variance: VarianceTreatment,
    ) -> Result<Self> {
        if y.len() != catalog.m {
            return Err(CpError::LengthMismatch {
                expected: catalog.m,
                actual: y.len(),
            });
        }
        let stats = SequenceStats::new(y);
        let group = match variance {
            VarianceTreatment::Known(s2) => Some(GroupStats::new(&[y], &[s2])?),
            _ => None,
        };
        let mut bounds = Vec::with_capacity(catalog.k_star + 2);
        let mut weights = Vec::with_capacity(catalog.k_star + 1);
        for fam in catalog.families() {
            if fam.is_empty() {
                return Err(CpError::InvalidState(format!("no compositions for K = {}", fam.k)));
            }
            let row: Vec<f64> = (0..fam.len())
                .map(|i| {
                    spare_to_bounds(fam.spare(i), catalog.w, catalog.m, &mut bounds);
                    let lik = match variance {
                        VarianceTreatment::Marginal => {
                            log_h_from_stats(&stats, &bounds, hyper.a_sigma, hyper.b_sigma)
                        }
                        VarianceTreatment::Known(_) => group.as_ref().unwrap().log_htilde(&bounds),
                        VarianceTreatment::Flat => 0.0,
                    };
                    lik + fam.log_coef(i)
                })
                .collect();
            weights.push(row);
        }
        let family_lse = weights.iter().map(|w| log_sum_exp(w)).collect();
        Ok(Self {
            weights,
            family_lse,
        })
    }

    pub fn k_star(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn family_weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    /// `log P(K = k) + log sum_m exp(weight)` for each `k`.
    pub fn k_log_weights(&self, lambda: f64) -> Vec<f64> {
        trunc_poisson_log_pmfs(lambda, self.k_star())
            .into_iter()
            .zip(&self.family_lse)
            .map(|(p, s)| p + s)
            .collect()
    }

    /// `log q_0` without the CRP denominator.
    pub fn log_q0(&self, lambda: f64, alpha0: f64) -> f64 {
        alpha0.ln() + log_sum_exp(&self.k_log_weights(lambda))
    }

    /// Draws `(K, composition index)` from the single-sequence posterior.
    pub fn sample_layout<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> (usize, usize) {
        let k = sample_log_categorical(&self.k_log_weights(lambda), rng);
        (k, sample_log_categorical(&self.weights[k], rng))
    }
}

/// `log q_0` for one sequence, returning the table reused by
/// [`sample_new_profile`].
pub fn log_q0(
    y: &[f64],
    hyper: &Hyperparameters,
    lambda: f64,
    alpha0: f64,
    catalog: &LayoutCatalog,
) -> Result<(f64, LogWeightTable)> {
    let table = LogWeightTable::build(y, catalog, hyper, VarianceTreatment::Marginal)?;
    Ok((table.log_q0(lambda, alpha0), table))
}

/// Inverse-gamma draw with shape `shape` and rate `rate`.
pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("positive inverse-gamma parameters");
    1.0 / g.sample(rng)
}

/// Draws segment levels `alpha_l ~ Normal(mean_l, var_l)`.
pub fn sample_levels<R: Rng + ?Sized>(posterior: &[(f64, f64)], rng: &mut R) -> Vec<f64> {
    posterior
        .iter()
        .map(|&(mu, var)| {
            let z: f64 = StandardNormal.sample(rng);
            mu + var.sqrt() * z
        })
        .collect()
}

/// A fresh cluster profile for sequence `y` drawn from its single-sequence
/// posterior, along with the variance the levels were drawn under.
///
/// With `sigma2 = Some(s)` the levels are drawn given `s`. With `None` the
/// variance is first drawn from its layout-conditional posterior, which makes
/// the profile an exact draw from the variance-marginal posterior.
pub fn sample_new_profile<R: Rng + ?Sized>(
    y: &[f64],
    hyper: &Hyperparameters,
    sigma2: Option<f64>,
    table: &LogWeightTable,
    catalog: &LayoutCatalog,
    lambda: f64,
    rng: &mut R,
) -> Result<(ClusterProfile, f64)> {
    let (k, i) = table.sample_layout(lambda, rng);
    let spare = catalog.family(k).spare(i);
    let mut bounds = Vec::with_capacity(k + 2);
    spare_to_bounds(spare, catalog.w, catalog.m, &mut bounds);
    let stats = SequenceStats::new(y);
    let s2 = match sigma2 {
        Some(s) => s,
        None => {
            let resid = stats.projection_residual(&bounds);
            let shape = (y.len() - k - 1) as f64 / 2.0 + hyper.a_sigma;
            sample_inv_gamma(shape, resid / 2.0 + 1.0 / hyper.b_sigma, rng)
        }
    };
    let posterior: Vec<(f64, f64)> = bounds
        .windows(2)
        .map(|w| {
            let seg = stats.segment(w[0], w[1]);
            (seg.mean, s2 / seg.count as f64)
        })
        .collect();
    let levels = sample_levels(&posterior, rng);
    let profile = ClusterProfile::new(catalog.layout(k, i), levels)?;
    Ok((profile, s2))
}
