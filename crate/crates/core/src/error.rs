// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

use crate::model::LayoutViolation;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("invalid segment layout: {0}")]
    InvalidLayout(#[from] LayoutViolation),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no admissible layout: M = {m}, w = {w} leaves no room for a single segment")]
    NoAdmissibleLayout { m: usize, w: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid sampler state: {0}")]
    InvalidState(String),

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, CpError>;
