// SPDX-License-Identifier: MIT OR Apache-2.0

//! The Gibbs sampler: assignments, variances, cluster profiles, the Poisson
//! rate `lambda` and the concentration `alpha0`, updated in that order.

mod chain;
mod init;

pub use chain::{derive_seed, run_chain, run_chains, ChainConfig, ChainMeta, ChainOutput, ChainStats};
pub use init::{init_state, InitMode};

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    max_changepoints, multinomial_logcoef, spare_to_bounds, trunc_poisson_log_normalizer,
    trunc_poisson_log_pmfs, LayoutCatalog,
};
use crate::error::{CpError, Result};
use crate::marginals::{
    log_qj_fixed, log_qj_from_rss, sample_inv_gamma, sample_levels, sample_new_profile,
    GroupStats, LogWeightTable, VarianceTreatment,
};
use crate::math::{log_sum_exp, sample_log_categorical};
use crate::model::{boundaries, ClusterProfile, GibbsState, Hyperparameters, SequenceDataset, SequenceStats};

/// How the data enter the assignment and profile updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMode {
    /// Assignment weights integrate out each sequence's variance.
    #[default]
    Marginal,
    /// Variances are fixed at their initial values and never updated.
    FixedVariance,
    /// Likelihood switched off; the chain targets the prior.
    PriorOnly,
}

/// Which change-point counts inform the `lambda` update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LambdaCounting {
    /// `sum_n K_n` over sequences, normalizer raised to `N`.
    #[default]
    PerSequence,
    /// `sum_r K_r` over clusters, normalizer raised to `L`.
    PerCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerOptions {
    pub mode: LikelihoodMode,
    pub update_assignments: bool,
    pub update_sigma2: bool,
    pub update_profiles: bool,
    pub update_lambda: bool,
    pub update_alpha0: bool,
    /// Shape of the gamma random-walk proposal for `lambda`.
    pub lambda_proposal_shape: f64,
    pub lambda_counting: LambdaCounting,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            mode: LikelihoodMode::Marginal,
            update_assignments: true,
            update_sigma2: true,
            update_profiles: true,
            update_lambda: true,
            update_alpha0: true,
            lambda_proposal_shape: 50.0,
            lambda_counting: LambdaCounting::PerSequence,
        }
    }
}

impl SamplerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_proposal_shape.is_finite() && self.lambda_proposal_shape > 0.0) {
            return Err(CpError::InvalidHyperparameters(format!(
                "lambda_proposal_shape must be positive, got {}",
                self.lambda_proposal_shape
            )));
        }
        Ok(())
    }
}

/// `log p(lambda | K)` up to a constant.
pub fn lambda_log_target(
    lambda: f64,
    sum_k: usize,
    count: usize,
    k_star: usize,
    hyper: &Hyperparameters,
) -> f64 {
    (hyper.a_lambda - 1.0 + sum_k as f64) * lambda.ln()
        - lambda / hyper.b_lambda
        - count as f64 * trunc_poisson_log_normalizer(lambda, k_star)
}

/// `log q(from | to) - log q(to | from)` for the gamma proposal with shape
/// `s` and mean equal to the current value.
pub fn lambda_proposal_log_ratio(from: f64, to: f64, s: f64) -> f64 {
    (2.0 * s - 1.0) * (from.ln() - to.ln()) - s * from / to + s * to / from
}

/// Log Metropolis-Hastings acceptance ratio for `lambda -> proposal`.
pub fn lambda_mh_log_ratio(
    lambda: f64,
    proposal: f64,
    sum_k: usize,
    count: usize,
    k_star: usize,
    hyper: &Hyperparameters,
    shape: f64,
) -> f64 {
    lambda_log_target(proposal, sum_k, count, k_star, hyper)
        - lambda_log_target(lambda, sum_k, count, k_star, hyper)
        + lambda_proposal_log_ratio(lambda, proposal, shape)
}

/// Probability of the `Gamma(a + L, .)` component in the `alpha0` update,
/// together with the shared rate.
pub fn alpha0_mixture(u: f64, clusters: usize, n: usize, hyper: &Hyperparameters) -> (f64, f64) {
    let rate = 1.0 / hyper.b_alpha0 - u.ln();
    let odds = (hyper.a_alpha0 + clusters as f64 - 1.0) / (n as f64 * rate);
    (odds / (1.0 + odds), rate)
}

/// Counters accumulated over a chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerCounters {
    pub lambda_proposed: u64,
    pub lambda_accepted: u64,
    pub births: u64,
}

/// Owns the precomputed layout catalog and per-sequence tables for one chain.
pub struct GibbsSampler<'a> {
    data: &'a SequenceDataset,
    hyper: Hyperparameters,
    options: SamplerOptions,
    catalog: LayoutCatalog,
    stats: Vec<SequenceStats>,
    tables: Vec<Option<(Option<f64>, LogWeightTable)>>,
    bounds: Vec<Vec<usize>>,
    pub counters: SamplerCounters,
}

impl<'a> GibbsSampler<'a> {
    pub fn new<R: Rng + ?Sized>(
        data: &'a SequenceDataset,
        hyper: &Hyperparameters,
        options: &SamplerOptions,
        rng: &mut R,
    ) -> Result<Self> {
        let m = data.num_locations();
        hyper.validate_for(m)?;
        options.validate()?;
        let k_star = max_changepoints(m, hyper.w, hyper.k_max_override)?;
        let catalog = LayoutCatalog::build(m, hyper.w, k_star, hyper.composition_budget, rng)?;
        let stats = data.rows().map(SequenceStats::new).collect();
        Ok(Self {
            data,
            hyper: hyper.clone(),
            options: options.clone(),
            catalog,
            stats,
            tables: vec![None; data.num_sequences()],
            bounds: Vec::new(),
            counters: SamplerCounters::default(),
        })
    }

    pub fn catalog(&self) -> &LayoutCatalog {
        &self.catalog
    }

    pub fn k_star(&self) -> usize {
        self.catalog.k_star
    }

    pub fn options(&self) -> &SamplerOptions {
        &self.options
    }

    /// Checks a state against the data and the admissible layouts.
    pub fn check_state(&self, state: &GibbsState) -> Result<()> {
        state.validate(self.data.num_sequences(), self.data.num_locations())?;
        for p in &state.profiles {
            if p.layout.min_len != self.hyper.w {
                return Err(CpError::InvalidState(format!(
                    "profile built with w = {}, expected {}",
                    p.layout.min_len, self.hyper.w
                )));
            }
            if p.layout.num_change_points() > self.k_star() {
                return Err(CpError::InvalidState(format!(
                    "profile has K = {} > k* = {}",
                    p.layout.num_change_points(),
                    self.k_star()
                )));
            }
        }
        Ok(())
    }

    /// One full sweep of every enabled update.
    pub fn sweep<R: Rng + ?Sized>(&mut self, state: &mut GibbsState, rng: &mut R) -> Result<()> {
        if !self.catalog.is_exhaustive() {
            self.catalog.resample(rng);
            self.tables.iter_mut().for_each(|t| *t = None);
        }
        if self.options.update_assignments {
            self.step1_assignments(state, rng)?;
        }
        if self.options.update_sigma2 {
            self.step2_variances(state, rng);
        }
        if self.options.update_profiles {
            self.step3_profiles(state, rng)?;
        }
        if self.options.update_lambda {
            self.step4_lambda(state, rng);
        }
        if self.options.update_alpha0 {
            self.step5_alpha0(state, rng);
        }
        Ok(())
    }

    fn variance_treatment(&self, sigma2: f64) -> VarianceTreatment {
        match self.options.mode {
            LikelihoodMode::Marginal => VarianceTreatment::Marginal,
            LikelihoodMode::FixedVariance => VarianceTreatment::Known(sigma2),
            LikelihoodMode::PriorOnly => VarianceTreatment::Flat,
        }
    }

    /// Rebuilds the single-sequence tables that are missing or stale.
    fn refresh_tables(&mut self, sigma2: &[f64]) -> Result<()> {
        let fixed = self.options.mode == LikelihoodMode::FixedVariance;
        let stale: Vec<usize> = (0..self.tables.len())
            .filter(|&n| match &self.tables[n] {
                None => true,
                Some((key, _)) => fixed && *key != Some(sigma2[n]),
            })
            .collect();
        if stale.is_empty() {
            return Ok(());
        }
        let built: Vec<Result<LogWeightTable>> = stale
            .par_iter()
            .map(|&n| {
                LogWeightTable::build(
                    self.data.row(n),
                    &self.catalog,
                    &self.hyper,
                    self.variance_treatment(sigma2[n]),
                )
            })
            .collect();
        for (n, t) in stale.into_iter().zip(built) {
            let key = fixed.then_some(sigma2[n]);
            self.tables[n] = Some((key, t?));
        }
        Ok(())
    }

    /// Reseats every sequence in turn given the others.
    pub fn step1_assignments<R: Rng + ?Sized>(
        &mut self,
        state: &mut GibbsState,
        rng: &mut R,
    ) -> Result<()> {
        self.refresh_tables(&state.sigma2)?;
        let m = self.data.num_locations();
        let mut sizes = state.cluster_sizes();
        self.bounds = state.profiles.iter().map(|p| boundaries(&p.layout)).collect();
        let mut log_w = Vec::with_capacity(state.profiles.len() + 1);
        for n in 0..self.data.num_sequences() {
            let c = state.assignments[n];
            sizes[c] -= 1;
            if sizes[c] == 0 {
                sizes.remove(c);
                state.profiles.remove(c);
                self.bounds.remove(c);
                for a in state.assignments.iter_mut().filter(|a| **a > c) {
                    *a -= 1;
                }
            }
            log_w.clear();
            for (j, p) in state.profiles.iter().enumerate() {
                let rss = self.stats[n].residual_ss(&self.bounds[j], &p.levels);
                log_w.push(match self.options.mode {
                    LikelihoodMode::Marginal => {
                        log_qj_from_rss(rss, m, sizes[j], self.hyper.a_sigma, self.hyper.b_sigma)
                    }
                    LikelihoodMode::FixedVariance => log_qj_fixed(rss, m, sizes[j], state.sigma2[n]),
                    LikelihoodMode::PriorOnly => (sizes[j] as f64).ln(),
                });
            }
            let table = &self.tables[n].as_ref().expect("refreshed").1;
            let log_q0 = table.log_q0(state.lambda, state.alpha0);
            let log_existing = log_sum_exp(&log_w);
            let log_total = crate::math::log_add_exp(log_q0, log_existing);
            let p_new = (log_q0 - log_total).exp();
            let open_new = log_w.is_empty() || rng.random::<f64>() < p_new;
            if open_new {
                let profile = match self.options.mode {
                    LikelihoodMode::Marginal => {
                        let (p, s2) = sample_new_profile(
                            self.data.row(n),
                            &self.hyper,
                            None,
                            table,
                            &self.catalog,
                            state.lambda,
                            rng,
                        )?;
                        state.sigma2[n] = s2;
                        p
                    }
                    LikelihoodMode::FixedVariance => {
                        sample_new_profile(
                            self.data.row(n),
                            &self.hyper,
                            Some(state.sigma2[n]),
                            table,
                            &self.catalog,
                            state.lambda,
                            rng,
                        )?
                        .0
                    }
                    LikelihoodMode::PriorOnly => {
                        let (k, i) = table.sample_layout(state.lambda, rng);
                        ClusterProfile::new(self.catalog.layout(k, i), vec![0.0; k + 1])?
                    }
                };
                self.bounds.push(boundaries(&profile.layout));
                state.profiles.push(profile);
                sizes.push(1);
                state.assignments[n] = state.profiles.len() - 1;
                self.counters.births += 1;
            } else {
                let j = sample_log_categorical(&log_w, rng);
                sizes[j] += 1;
                state.assignments[n] = j;
            }
        }
        Ok(())
    }

    /// Draws each variance from its inverse-gamma full conditional.
    pub fn step2_variances<R: Rng + ?Sized>(&mut self, state: &mut GibbsState, rng: &mut R) {
        let (a, b) = (self.hyper.a_sigma, self.hyper.b_sigma);
        let half_m = self.data.num_locations() as f64 / 2.0;
        match self.options.mode {
            LikelihoodMode::FixedVariance => {}
            LikelihoodMode::PriorOnly => {
                for s2 in state.sigma2.iter_mut() {
                    *s2 = sample_inv_gamma(a, 1.0 / b, rng);
                }
            }
            LikelihoodMode::Marginal => {
                let bounds: Vec<Vec<usize>> =
                    state.profiles.iter().map(|p| boundaries(&p.layout)).collect();
                for n in 0..state.sigma2.len() {
                    let c = state.assignments[n];
                    let rss = self.stats[n].residual_ss(&bounds[c], &state.profiles[c].levels);
                    state.sigma2[n] = sample_inv_gamma(half_m + a, rss / 2.0 + 1.0 / b, rng);
                }
            }
        }
    }

    /// Redraws every cluster's layout (K, then the composition) and levels.
    pub fn step3_profiles<R: Rng + ?Sized>(
        &mut self,
        state: &mut GibbsState,
        rng: &mut R,
    ) -> Result<()> {
        let (m, w) = (self.catalog.m, self.catalog.w);
        let k_pmf = trunc_poisson_log_pmfs(state.lambda, self.k_star());
        let mut bounds = Vec::with_capacity(self.k_star() + 2);
        for r in 0..state.profiles.len() {
            let members = state.members(r);
            let prior_only = self.options.mode == LikelihoodMode::PriorOnly;
            let group = if prior_only {
                None
            } else {
                let rows: Vec<&[f64]> = members.iter().map(|&n| self.data.row(n)).collect();
                let s2: Vec<f64> = members.iter().map(|&n| state.sigma2[n]).collect();
                Some(GroupStats::new(&rows, &s2)?)
            };
            let current = &state.profiles[r].layout;
            let mut weights: Vec<Vec<f64>> = Vec::with_capacity(self.k_star() + 1);
            let mut extras: Vec<Option<Vec<usize>>> = Vec::with_capacity(self.k_star() + 1);
            for fam in self.catalog.families() {
                let mut row = Vec::with_capacity(fam.len() + 1);
                for i in 0..fam.len() {
                    spare_to_bounds(fam.spare(i), w, m, &mut bounds);
                    let lik = group.as_ref().map_or(0.0, |g| g.log_htilde(&bounds));
                    row.push(lik + fam.log_coef(i));
                }
                let extra = (!fam.exhaustive
                    && current.num_change_points() == fam.k
                    && !fam.contains(&current.spare))
                .then(|| current.spare.clone());
                if let Some(spare) = &extra {
                    spare_to_bounds(spare, w, m, &mut bounds);
                    let lik = group.as_ref().map_or(0.0, |g| g.log_htilde(&bounds));
                    row.push(lik + multinomial_logcoef(spare));
                }
                weights.push(row);
                extras.push(extra);
            }
            let k_log: Vec<f64> = weights
                .iter()
                .zip(&k_pmf)
                .map(|(row, p)| p + log_sum_exp(row))
                .collect();
            let k = sample_log_categorical(&k_log, rng);
            let i = sample_log_categorical(&weights[k], rng);
            let fam = self.catalog.family(k);
            let layout = if i < fam.len() {
                self.catalog.layout(k, i)
            } else {
                extras[k].clone().map_or_else(
                    || Err(CpError::InvalidState("missing forced composition".into())),
                    |s| crate::combinatorics::layout_from_lengths(&s, w, m),
                )?
            };
            let levels = match &group {
                Some(g) => sample_levels(&g.level_posterior(&boundaries(&layout)), rng),
                None => vec![0.0; k + 1],
            };
            state.profiles[r] = ClusterProfile::new(layout, levels)?;
        }
        Ok(())
    }

    fn change_point_total(&self, state: &GibbsState) -> (usize, usize) {
        match self.options.lambda_counting {
            LambdaCounting::PerSequence => (
                state
                    .assignments
                    .iter()
                    .map(|&c| state.profiles[c].layout.num_change_points())
                    .sum(),
                state.assignments.len(),
            ),
            LambdaCounting::PerCluster => (
                state
                    .profiles
                    .iter()
                    .map(|p| p.layout.num_change_points())
                    .sum(),
                state.profiles.len(),
            ),
        }
    }

    /// One Metropolis-Hastings move on `lambda`.
    pub fn step4_lambda<R: Rng + ?Sized>(&mut self, state: &mut GibbsState, rng: &mut R) {
        let s = self.options.lambda_proposal_shape;
        let (sum_k, count) = self.change_point_total(state);
        let proposal = Gamma::new(s, state.lambda / s)
            .expect("positive proposal parameters")
            .sample(rng);
        self.counters.lambda_proposed += 1;
        if !(proposal.is_finite() && proposal > 0.0) {
            return;
        }
        let log_ratio = lambda_mh_log_ratio(
            state.lambda,
            proposal,
            sum_k,
            count,
            self.k_star(),
            &self.hyper,
            s,
        );
        if rng.random::<f64>().ln() < log_ratio {
            state.lambda = proposal;
            self.counters.lambda_accepted += 1;
        }
    }

    /// Auxiliary-variable update of the concentration parameter.
    pub fn step5_alpha0<R: Rng + ?Sized>(&mut self, state: &mut GibbsState, rng: &mut R) {
        let n = state.assignments.len();
        let clusters = state.profiles.len();
        let u: f64 = Beta::new(state.alpha0 + 1.0, n as f64)
            .expect("positive beta parameters")
            .sample(rng);
        let (pi, rate) = alpha0_mixture(u, clusters, n, &self.hyper);
        let shape = if rng.random::<f64>() < pi {
            self.hyper.a_alpha0 + clusters as f64
        } else {
            self.hyper.a_alpha0 + clusters as f64 - 1.0
        };
        let draw = Gamma::new(shape, 1.0 / rate)
            .expect("positive gamma parameters")
            .sample(rng);
        if draw > 0.0 && draw.is_finite() {
            state.alpha0 = draw;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha0_mixture_at_unit_u() {
        let h = Hyperparameters::default();
        let (pi, rate) = alpha0_mixture(1.0, 2, 25, &h);
        assert!((rate - 0.001).abs() < 1e-15);
        assert!((pi - 120.0 / 121.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_ratio_is_antisymmetric() {
        let h = Hyperparameters::default();
        assert!(lambda_mh_log_ratio(1.3, 1.3, 4, 10, 3, &h, 50.0).abs() < 1e-12);
        let f = lambda_mh_log_ratio(1.3, 0.8, 4, 10, 3, &h, 50.0);
        let b = lambda_mh_log_ratio(0.8, 1.3, 4, 10, 3, &h, 50.0);
        assert!((f + b).abs() < 1e-10);
    }
}
