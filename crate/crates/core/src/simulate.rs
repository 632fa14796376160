// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scenario data generation and moving-median preprocessing.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CpError, Result};
use crate::marginals::sample_inv_gamma;
use crate::model::{ClusterProfile, GibbsState, SegmentLayout, SequenceDataset};

/// Shape of the inverse-gamma the true variances are drawn from.
pub const SIGMA2_SHAPE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    /// Interior change points `tau_1..tau_K` (1-based).
    pub change_points: Vec<usize>,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub m: usize,
    pub w: usize,
    pub profiles: Vec<ProfileSpec>,
    /// Cluster proportions; balanced when absent.
    #[serde(default)]
    pub proportions: Option<Vec<f64>>,
    /// Mean of the inverse-gamma the variances are drawn from.
    pub sigma2_mean: f64,
}

impl ScenarioSpec {
    fn two_cluster(n: usize, m: usize, w: usize, sigma2_mean: f64, a: ProfileSpec, b: ProfileSpec) -> Self {
        Self {
            n,
            m,
            w,
            profiles: vec![a, b],
            proportions: None,
            sigma2_mean,
        }
    }

    /// Low-noise scenario: two clusters, two change points each.
    pub fn scenario1(n: usize) -> Self {
        Self::two_cluster(
            n,
            50,
            10,
            0.05,
            ProfileSpec {
                change_points: vec![19, 34],
                levels: vec![5.0, 20.0, 10.0],
            },
            ProfileSpec {
                change_points: vec![15, 32],
                levels: vec![17.0, 10.0, 2.0],
            },
        )
    }

    /// Same profiles with ten times the noise.
    pub fn scenario2(n: usize) -> Self {
        Self {
            sigma2_mean: 0.5,
            ..Self::scenario1(n)
        }
    }

    /// Twenty-five sequences of length 50, 100 or 200.
    pub fn scenario3(m: usize) -> Result<Self> {
        let (w, cps_a, cps_b) = match m {
            50 => (10, vec![17, 34], vec![17, 34]),
            100 => (20, vec![34, 67], vec![34, 67]),
            200 => (50, vec![67, 134], vec![67, 134]),
            _ => {
                return Err(CpError::OutOfRange(format!(
                    "scenario 3 is defined for M in {{50, 100, 200}}, got {m}"
                )))
            }
        };
        Ok(Self::two_cluster(
            25,
            m,
            w,
            0.05,
            ProfileSpec {
                change_points: cps_a,
                levels: vec![2.0, 15.0, 7.0],
            },
            ProfileSpec {
                change_points: cps_b,
                levels: vec![20.0, 5.0, 12.0],
            },
        ))
    }

    pub fn preset(name: &str, n: Option<usize>, m: Option<usize>) -> Result<Self> {
        match name {
            "scenario1" => Ok(Self::scenario1(n.unwrap_or(10))),
            "scenario2" => Ok(Self::scenario2(n.unwrap_or(10))),
            "scenario3" => {
                let mut s = Self::scenario3(m.unwrap_or(50))?;
                if let Some(n) = n {
                    s.n = n;
                }
                Ok(s)
            }
            other => Err(CpError::OutOfRange(format!("unknown scenario preset {other:?}"))),
        }
    }

    pub fn cluster_profiles(&self) -> Result<Vec<ClusterProfile>> {
        self.profiles
            .iter()
            .map(|p| {
                let layout = SegmentLayout::from_change_points(&p.change_points, self.w, self.m)?;
                ClusterProfile::new(layout, p.levels.clone())
            })
            .collect()
    }

    /// Cluster sizes from the proportions (largest remainder) or balanced
    /// with earlier clusters taking the remainder.
    pub fn cluster_sizes(&self) -> Result<Vec<usize>> {
        let l = self.profiles.len();
        if l == 0 {
            return Err(CpError::OutOfRange("scenario has no clusters".into()));
        }
        match &self.proportions {
            None => Ok((0..l).map(|r| self.n / l + usize::from(r < self.n % l)).collect()),
            Some(p) => {
                if p.len() != l || p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(CpError::OutOfRange(
                        "proportions must be nonnegative, one per cluster".into(),
                    ));
                }
                let total: f64 = p.iter().sum();
                if total <= 0.0 {
                    return Err(CpError::OutOfRange("proportions sum to zero".into()));
                }
                let quotas: Vec<f64> = p.iter().map(|x| x / total * self.n as f64).collect();
                let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
                let mut order: Vec<usize> = (0..l).collect();
                order.sort_by(|&a, &b| {
                    let ra = quotas[a] - sizes[a] as f64;
                    let rb = quotas[b] - sizes[b] as f64;
                    rb.total_cmp(&ra).then(a.cmp(&b))
                });
                let short = self.n - sizes.iter().sum::<usize>();
                for &r in order.iter().take(short) {
                    sizes[r] += 1;
                }
                Ok(sizes)
            }
        }
    }
}

/// Draws a dataset from `spec` together with its generating parameters.
pub fn generate_dataset(spec: &ScenarioSpec, seed: u64) -> Result<(SequenceDataset, GibbsState)> {
    if !(spec.sigma2_mean.is_finite() && spec.sigma2_mean > 0.0) {
        return Err(CpError::OutOfRange(format!(
            "sigma2_mean must be positive, got {}",
            spec.sigma2_mean
        )));
    }
    if spec.n == 0 {
        return Err(CpError::OutOfRange("scenario needs at least one sequence".into()));
    }
    let profiles = spec.cluster_profiles()?;
    let sizes = spec.cluster_sizes()?;
    let assignments: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(r, &s)| std::iter::repeat_n(r, s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = (SIGMA2_SHAPE - 1.0) * spec.sigma2_mean;
    let mut sigma2 = Vec::with_capacity(spec.n);
    let mut rows = Vec::with_capacity(spec.n);
    let fitted: Vec<Vec<f64>> = profiles.iter().map(ClusterProfile::fitted).collect();
    for &c in &assignments {
        let s2 = sample_inv_gamma(SIGMA2_SHAPE, rate, &mut rng);
        let noise = Normal::new(0.0, s2.sqrt()).map_err(|e| CpError::Numerical(e.to_string()))?;
        rows.push(fitted[c].iter().map(|mu| mu + noise.sample(&mut rng)).collect());
        sigma2.push(s2);
    }
    // Drop clusters that received no sequences.
    let used: Vec<usize> = (0..profiles.len()).filter(|&r| sizes[r] > 0).collect();
    let remap: Vec<usize> = (0..profiles.len())
        .map(|r| used.iter().position(|&u| u == r).unwrap_or(usize::MAX))
        .collect();
    let truth = GibbsState {
        assignments: assignments.iter().map(|&c| remap[c]).collect(),
        profiles: used.iter().map(|&r| profiles[r].clone()).collect(),
        sigma2,
        lambda: 1.0,
        alpha0: 1.0,
    };
    Ok((SequenceDataset::from_rows(rows)?, truth))
}

/// Moving-median window option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "String")]
pub enum MedianWindow {
    #[default]
    Off,
    /// Non-overlapping blocks of `size`; a short trailing block is dropped.
    Block { size: usize },
    /// Windows of `size` starting every `stride` locations.
    Rolling { size: usize, stride: usize },
}

impl FromStr for MedianWindow {
    type Err = CpError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CpError::OutOfRange(format!("window must be off, block:k, roll:k or roll:k/s, got {s:?}"));
        let pos = |v: &str| v.parse::<usize>().ok().filter(|&x| x > 0).ok_or_else(bad);
        if s == "off" {
            return Ok(Self::Off);
        }
        if let Some(k) = s.strip_prefix("block:") {
            return Ok(Self::Block { size: pos(k)? });
        }
        if let Some(rest) = s.strip_prefix("roll:") {
            return Ok(match rest.split_once('/') {
                Some((k, st)) => Self::Rolling {
                    size: pos(k)?,
                    stride: pos(st)?,
                },
                None => Self::Rolling {
                    size: pos(rest)?,
                    stride: 1,
                },
            });
        }
        Err(bad())
    }
}

impl TryFrom<String> for MedianWindow {
    type Error = CpError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for MedianWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Off => write!(f, "off"),
            Self::Block { size } => write!(f, "block:{size}"),
            Self::Rolling { size, stride: 1 } => write!(f, "roll:{size}"),
            Self::Rolling { size, stride } => write!(f, "roll:{size}/{stride}"),
        }
    }
}

impl From<MedianWindow> for String {
    fn from(w: MedianWindow) -> String {
        w.to_string()
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Non-overlapping window medians.
pub fn moving_median(y: &[f64], window: usize) -> Result<Vec<f64>> {
    apply_window(y, MedianWindow::Block { size: window })
}

pub fn apply_window(y: &[f64], window: MedianWindow) -> Result<Vec<f64>> {
    let (size, stride) = match window {
        MedianWindow::Off => return Ok(y.to_vec()),
        MedianWindow::Block { size } => (size, size),
        MedianWindow::Rolling { size, stride } => (size, stride),
    };
    if size == 0 || stride == 0 {
        return Err(CpError::OutOfRange("window and stride must be at least 1".into()));
    }
    if size > y.len() {
        return Err(CpError::OutOfRange(format!(
            "window {size} exceeds sequence length {}",
            y.len()
        )));
    }
    let mut buf = Vec::with_capacity(size);
    Ok((0..=y.len() - size)
        .step_by(stride)
        .map(|s| {
            buf.clear();
            buf.extend_from_slice(&y[s..s + size]);
            median(&mut buf)
        })
        .collect())
}

/// Applies the window to every row.
pub fn preprocess(data: &SequenceDataset, window: MedianWindow) -> Result<SequenceDataset> {
    if window == MedianWindow::Off {
        return Ok(data.clone());
    }
    data.map_rows(|r| apply_window(r, window))
}
