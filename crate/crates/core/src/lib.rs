// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dirichlet-process clustering of ordered sequences by their
//! piecewise-constant change-point profiles.
//!
//! A Gibbs sampler jointly infers the partition of sequences into clusters,
//! each cluster's number and location of change points and its segment
//! levels, per-sequence noise variances, the truncated-Poisson rate on the
//! number of change points, and the DP concentration parameter.

pub mod combinatorics;
pub mod diagnostics;
pub mod error;
pub mod marginals;
pub mod math;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod simulate;

pub use error::{CpError, Result};
pub use model::{
    ClusterProfile, GibbsState, Hyperparameters, LayoutViolation, SegmentLayout, SequenceDataset,
};
pub use sampler::{
    init_state, run_chain, run_chains, ChainConfig, ChainOutput, GibbsSampler, InitMode,
    LikelihoodMode, SamplerOptions,
};
