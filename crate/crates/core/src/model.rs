// SPDX-License-Identifier: MIT OR Apache-2.0

//! Domain types shared by every other module: datasets, segment layouts,
//! cluster profiles, hyperparameters and the sampler state, together with the
//! per-segment sufficient statistics the marginal likelihoods are built from.
//!
//! Locations are 1-based in [`SegmentLayout`] (so `tau[0] == 1` and
//! `tau[K + 1] == M`). Segments `1..=K` are half-open `[tau[l-1], tau[l])`;
//! the final segment is closed at `M`, which makes segment lengths sum to `M`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::structural_max_changepoints;
use crate::error::{CpError, Result};

/// `N` ordered sequences of length `M`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    values: Vec<f64>,
    n: usize,
    m: usize,
    pub sequence_ids: Vec<String>,
    pub location_ids: Vec<String>,
}

impl SequenceDataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        sequence_ids: Vec<String>,
        location_ids: Vec<String>,
    ) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(CpError::InvalidDataset("no sequences".into()));
        }
        let m = rows[0].len();
        if m < 2 {
            return Err(CpError::InvalidDataset(format!(
                "sequences need at least 2 locations, got {m}"
            )));
        }
        if sequence_ids.len() != n {
            return Err(CpError::InvalidDataset(format!(
                "{} sequence ids for {n} rows",
                sequence_ids.len()
            )));
        }
        if location_ids.len() != m {
            return Err(CpError::InvalidDataset(format!(
                "{} location ids for {m} columns",
                location_ids.len()
            )));
        }
        let mut values = Vec::with_capacity(n * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(CpError::InvalidDataset(format!(
                    "row {} ({}) has {} values, expected {m}",
                    i + 1,
                    sequence_ids[i],
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(CpError::InvalidDataset(format!(
                    "row {} ({}) has a missing or non-finite value at column {}",
                    i + 1,
                    sequence_ids[i],
                    j + 1
                )));
            }
            values.extend(row);
        }
        Ok(Self {
            values,
            n,
            m,
            sequence_ids,
            location_ids,
        })
    }

    /// Dataset with generated ids (`seq1..`, `1..M`).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let sequence_ids = (1..=n).map(|i| format!("seq{i}")).collect();
        let location_ids = (1..=m).map(|b| b.to_string()).collect();
        Self::new(rows, sequence_ids, location_ids)
    }

    pub fn num_sequences(&self) -> usize {
        self.n
    }

    pub fn num_locations(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m)
    }

    /// Apply `f` to every row; all output rows must share one length.
    pub fn map_rows<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let rows = self.rows().map(f).collect::<Result<Vec<_>>>()?;
        let m = rows.first().map_or(0, Vec::len);
        let location_ids = (1..=m).map(|b| b.to_string()).collect();
        Self::new(rows, self.sequence_ids.clone(), location_ids)
    }
}

/// The first invariant a [`SegmentLayout`] breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutViolation {
    #[error("no admissible layout: M - 1 - w = {m} - 1 - {w} is not positive")]
    NoRoom { m: usize, w: usize },
    #[error("w must be positive")]
    ZeroMinLength,
    #[error("K exceeds k*: K = {k}, k* = {k_star}")]
    TooManyChangePoints { k: usize, k_star: usize },
    #[error("tau must have K + 2 = {expected} entries, got {actual}")]
    TauLength { expected: usize, actual: usize },
    #[error("tau must start at 1 and end at M = {m}")]
    TauEndpoints { m: usize },
    #[error("tau is not strictly increasing at position {l}")]
    NotIncreasing { l: usize },
    #[error("spare lengths must have K + 1 = {expected} entries, got {actual}")]
    SpareLength { expected: usize, actual: usize },
    #[error("recursion tau_l = tau_(l-1) + m_l + w fails at l = {l}")]
    Recursion { l: usize },
    #[error("spare lengths sum to {actual}, expected m0 = {expected}")]
    SpareSum { expected: usize, actual: usize },
    #[error("segment {l} has length {len} < w = {w}")]
    SegmentTooShort { l: usize, len: usize, w: usize },
}

/// Change-point structure of one sequence: `K`, positions `tau` and spare
/// lengths `m` (segment length minus `w`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentLayout {
    /// `tau_0 = 1, tau_1, ..., tau_K, tau_{K+1} = M` (1-based).
    pub tau: Vec<usize>,
    /// Spare lengths `m_1..m_{K+1}`.
    pub spare: Vec<usize>,
    /// Minimum segment length `w`.
    pub min_len: usize,
    /// Sequence length `M`.
    pub len: usize,
}

impl SegmentLayout {
    /// Builds a layout from spare lengths, checking every invariant.
    pub fn from_spare(spare: &[usize], min_len: usize, len: usize) -> Result<Self> {
        crate::combinatorics::layout_from_lengths(spare, min_len, len)
    }

    /// Builds a layout from the interior change points `tau_1..tau_K`.
    pub fn from_change_points(change_points: &[usize], min_len: usize, len: usize) -> Result<Self> {
        let mut tau = Vec::with_capacity(change_points.len() + 2);
        tau.push(1);
        tau.extend_from_slice(change_points);
        tau.push(len);
        let mut spare = Vec::with_capacity(change_points.len() + 1);
        for l in 1..tau.len() {
            let gap = tau[l]
                .checked_sub(tau[l - 1])
                .and_then(|g| g.checked_sub(min_len))
                .ok_or(LayoutViolation::SegmentTooShort {
                    l,
                    len: tau[l].saturating_sub(tau[l - 1]),
                    w: min_len,
                })?;
            spare.push(gap);
        }
        let layout = Self {
            tau,
            spare,
            min_len,
            len,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// The single-segment layout (`K = 0`).
    pub fn single(min_len: usize, len: usize) -> Result<Self> {
        Self::from_change_points(&[], min_len, len)
    }

    pub fn num_change_points(&self) -> usize {
        self.spare.len().saturating_sub(1)
    }

    pub fn num_segments(&self) -> usize {
        self.spare.len()
    }

    /// `tau_1..tau_K`.
    pub fn change_points(&self) -> &[usize] {
        &self.tau[1..self.tau.len() - 1]
    }

    /// 0-based half-open `[start, end)` index ranges of each segment.
    pub fn segment_ranges(&self) -> Vec<(usize, usize)> {
        let k = self.num_change_points();
        (0..=k)
            .map(|l| {
                let start = self.tau[l] - 1;
                let end = if l == k { self.len } else { self.tau[l + 1] - 1 };
                (start, end)
            })
            .collect()
    }

    pub fn segment_lengths(&self) -> Vec<usize> {
        self.segment_ranges().iter().map(|(s, e)| e - s).collect()
    }

    /// Segment index (0-based) of 0-based location `b`.
    pub fn segment_of(&self, b: usize) -> usize {
        // tau[l] - 1 is the 0-based start of segment l.
        self.change_points().partition_point(|&t| t - 1 <= b)
    }

    /// Checks every layout invariant, reporting the first failure.
    pub fn validate(&self) -> std::result::Result<(), LayoutViolation> {
        let (m, w) = (self.len, self.min_len);
        if w == 0 {
            return Err(LayoutViolation::ZeroMinLength);
        }
        let k_star = structural_max_changepoints(m, w).ok_or(LayoutViolation::NoRoom { m, w })?;
        let k = self.tau.len().saturating_sub(2);
        if k > k_star {
            return Err(LayoutViolation::TooManyChangePoints { k, k_star });
        }
        if self.tau.len() < 2 {
            return Err(LayoutViolation::TauLength {
                expected: 2,
                actual: self.tau.len(),
            });
        }
        if self.tau[0] != 1 || *self.tau.last().unwrap() != m {
            return Err(LayoutViolation::TauEndpoints { m });
        }
        if let Some(l) = (1..self.tau.len()).find(|&l| self.tau[l] <= self.tau[l - 1]) {
            return Err(LayoutViolation::NotIncreasing { l });
        }
        if self.spare.len() != k + 1 {
            return Err(LayoutViolation::SpareLength {
                expected: k + 1,
                actual: self.spare.len(),
            });
        }
        for l in 1..=k + 1 {
            if self.tau[l] != self.tau[l - 1] + self.spare[l - 1] + w {
                return Err(LayoutViolation::Recursion { l });
            }
        }
        let m0 = m - 1 - (k + 1) * w;
        let total: usize = self.spare.iter().sum();
        if total != m0 {
            return Err(LayoutViolation::SpareSum {
                expected: m0,
                actual: total,
            });
        }
        for (l, len) in self.segment_lengths().into_iter().enumerate() {
            if len < w {
                return Err(LayoutViolation::SegmentTooShort { l: l + 1, len, w });
            }
        }
        Ok(())
    }
}

/// Free-function form of [`SegmentLayout::validate`].
pub fn validate_layout(layout: &SegmentLayout) -> std::result::Result<(), LayoutViolation> {
    layout.validate()
}

/// Piecewise-constant function shared by the members of a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub layout: SegmentLayout,
    /// Segment levels `alpha_1..alpha_{K+1}`.
    pub levels: Vec<f64>,
}

impl ClusterProfile {
    pub fn new(layout: SegmentLayout, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != layout.num_segments() {
            return Err(CpError::LengthMismatch {
                expected: layout.num_segments(),
                actual: levels.len(),
            });
        }
        Ok(Self { layout, levels })
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.levels.len() != self.layout.num_segments() {
            return Err(CpError::LengthMismatch {
                expected: self.layout.num_segments(),
                actual: self.levels.len(),
            });
        }
        if self.levels.iter().any(|a| !a.is_finite()) {
            return Err(CpError::InvalidState("non-finite segment level".into()));
        }
        Ok(())
    }

    /// The step function evaluated at every location.
    pub fn fitted(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout.len);
        for ((start, end), level) in self.layout.segment_ranges().into_iter().zip(&self.levels) {
            out.extend(std::iter::repeat_n(*level, end - start));
        }
        out
    }

    /// Average of the step function over all locations.
    pub fn mean_level(&self) -> f64 {
        let lens = self.layout.segment_lengths();
        let total: f64 = lens
            .iter()
            .zip(&self.levels)
            .map(|(&n, a)| n as f64 * a)
            .sum();
        total / self.layout.len as f64
    }
}

/// Fixed prior constants. Gamma and inverse-gamma pairs follow the
/// `(shape a, scale b)` convention, so every rate that appears is `1/b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_alpha0: f64,
    pub b_alpha0: f64,
    /// Minimum segment length `w`.
    pub w: usize,
    /// Optional cap on `k*`.
    pub k_max_override: Option<usize>,
    /// Largest number of compositions evaluated exactly per `K`; larger
    /// spaces are subsampled.
    pub composition_budget: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            a_sigma: 2.0,
            b_sigma: 1000.0,
            a_lambda: 2.0,
            b_lambda: 1000.0,
            a_alpha0: 2.0,
            b_alpha0: 1000.0,
            w: 10,
            k_max_override: None,
            composition_budget: 100_000,
        }
    }
}

impl Hyperparameters {
    pub fn with_min_len(mut self, w: usize) -> Self {
        self.w = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("a_sigma", self.a_sigma),
            ("b_sigma", self.b_sigma),
            ("a_lambda", self.a_lambda),
            ("b_lambda", self.b_lambda),
            ("a_alpha0", self.a_alpha0),
            ("b_alpha0", self.b_alpha0),
        ];
        for (name, v) in pairs {
            if !(v.is_finite() && v > 0.0) {
                return Err(CpError::InvalidHyperparameters(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        if self.w == 0 {
            return Err(CpError::InvalidHyperparameters("w must be positive".into()));
        }
        if self.composition_budget == 0 {
            return Err(CpError::InvalidHyperparameters(
                "composition_budget must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Validates against a sequence length: requires `M - 1 - w > 0`.
    pub fn validate_for(&self, m: usize) -> Result<()> {
        self.validate()?;
        if structural_max_changepoints(m, self.w).is_none() {
            return Err(CpError::NoAdmissibleLayout { m, w: self.w });
        }
        Ok(())
    }
}

/// Full sampler state. Cluster labels are 0-based indices into `profiles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub assignments: Vec<usize>,
    pub profiles: Vec<ClusterProfile>,
    pub sigma2: Vec<f64>,
    pub lambda: f64,
    pub alpha0: f64,
}

impl GibbsState {
    pub fn num_clusters(&self) -> usize {
        self.profiles.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.profiles.len()];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == cluster).then_some(i))
            .collect()
    }

    /// Checks the state against `n` sequences of length `m`.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.assignments.len() != n || self.sigma2.len() != n {
            return Err(CpError::InvalidState(format!(
                "state covers {} assignments and {} variances for {n} sequences",
                self.assignments.len(),
                self.sigma2.len()
            )));
        }
        let l = self.profiles.len();
        if l == 0 || l > n {
            return Err(CpError::InvalidState(format!(
                "{l} clusters for {n} sequences"
            )));
        }
        if let Some(&c) = self.assignments.iter().find(|&&c| c >= l) {
            return Err(CpError::InvalidState(format!(
                "assignment {c} refers to a missing cluster"
            )));
        }
        if let Some(r) = self.cluster_sizes().iter().position(|&s| s == 0) {
            return Err(CpError::InvalidState(format!("cluster {r} is empty")));
        }
        for p in &self.profiles {
            p.validate()?;
            if p.layout.len != m {
                return Err(CpError::InvalidState(format!(
                    "profile of length {} for sequences of length {m}",
                    p.layout.len
                )));
            }
        }
        if self.sigma2.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(CpError::InvalidState("non-positive variance".into()));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(CpError::InvalidState(format!("lambda = {}", self.lambda)));
        }
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(CpError::InvalidState(format!("alpha0 = {}", self.alpha0)));
        }
        Ok(())
    }
}

/// Raw per-segment statistics of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStats {
    pub counts: Vec<usize>,
    pub sums: Vec<f64>,
    pub sums_sq: Vec<f64>,
    pub total_ss: f64,
}

/// Per-segment `(count, sum, sum of squares)` and the total sum of squares.
pub fn segment_stats(y: &[f64], layout: &SegmentLayout) -> Result<SegmentStats> {
    if y.len() != layout.len {
        return Err(CpError::LengthMismatch {
            expected: layout.len,
            actual: y.len(),
        });
    }
    let ranges = layout.segment_ranges();
    let mut stats = SegmentStats {
        counts: Vec::with_capacity(ranges.len()),
        sums: Vec::with_capacity(ranges.len()),
        sums_sq: Vec::with_capacity(ranges.len()),
        total_ss: y.iter().map(|v| v * v).sum(),
    };
    for (start, end) in ranges {
        let seg = &y[start..end];
        stats.counts.push(seg.len());
        stats.sums.push(seg.iter().sum());
        stats.sums_sq.push(seg.iter().map(|v| v * v).sum());
    }
    Ok(stats)
}

/// `sum_b (y_b - alpha_{seg(b)})^2`.
pub fn residual_ss(y: &[f64], layout: &SegmentLayout, levels: &[f64]) -> Result<f64> {
    if y.len() != layout.len {
        return Err(CpError::LengthMismatch {
            expected: layout.len,
            actual: y.len(),
        });
    }
    if levels.len() != layout.num_segments() {
        return Err(CpError::LengthMismatch {
            expected: layout.num_segments(),
            actual: levels.len(),
        });
    }
    Ok(layout
        .segment_ranges()
        .into_iter()
        .zip(levels)
        .map(|((s, e), a)| y[s..e].iter().map(|v| (v - a).powi(2)).sum::<f64>())
        .sum())
}

/// 0-based segment boundaries `[0, tau_1 - 1, ..., tau_K - 1, M]`.
pub(crate) fn boundaries(layout: &SegmentLayout) -> Vec<usize> {
    let mut b: Vec<usize> = layout.tau.iter().map(|t| t - 1).collect();
    *b.last_mut().unwrap() = layout.len;
    b
}

/// Moments of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMoments {
    pub count: usize,
    pub mean: f64,
    /// `sum (y_b - mean)^2` over the segment.
    pub within_ss: f64,
}

/// Prefix sums of a sequence, centered on its overall mean so within-segment
/// sums of squares do not lose precision to large levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceStats {
    shift: f64,
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
}

impl SequenceStats {
    pub fn new(y: &[f64]) -> Self {
        let shift = y.iter().sum::<f64>() / y.len().max(1) as f64;
        let mut prefix = Vec::with_capacity(y.len() + 1);
        let mut prefix_sq = Vec::with_capacity(y.len() + 1);
        let (mut s, mut q) = (0.0, 0.0);
        prefix.push(0.0);
        prefix_sq.push(0.0);
        for v in y {
            let c = v - shift;
            s += c;
            q += c * c;
            prefix.push(s);
            prefix_sq.push(q);
        }
        Self {
            shift,
            prefix,
            prefix_sq,
        }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Moments of the 0-based half-open range `[lo, hi)`.
    #[inline]
    pub fn segment(&self, lo: usize, hi: usize) -> SegmentMoments {
        let count = hi - lo;
        let n = count as f64;
        let s = self.prefix[hi] - self.prefix[lo];
        let q = self.prefix_sq[hi] - self.prefix_sq[lo];
        SegmentMoments {
            count,
            mean: s / n + self.shift,
            within_ss: (q - s * s / n).max(0.0),
        }
    }

    /// `y^T y - y^T X V^{-1} X^T y` for the segmentation given by `bounds`.
    #[inline]
    pub fn projection_residual(&self, bounds: &[usize]) -> f64 {
        bounds
            .windows(2)
            .map(|w| self.segment(w[0], w[1]).within_ss)
            .sum()
    }

    /// Residual sum of squares against the step function `levels`.
    pub fn residual_ss(&self, bounds: &[usize], levels: &[f64]) -> f64 {
        bounds
            .windows(2)
            .zip(levels)
            .map(|(w, a)| {
                let seg = self.segment(w[0], w[1]);
                let d = seg.mean - a;
                seg.within_ss + seg.count as f64 * d * d
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario1_cluster1() -> SegmentLayout {
        SegmentLayout {
            tau: vec![1, 19, 34, 50],
            spare: vec![8, 5, 6],
            min_len: 10,
            len: 50,
        }
    }

    #[test]
    fn validates_scenario_layout() {
        assert_eq!(validate_layout(&scenario1_cluster1()), Ok(()));
        let single = SegmentLayout {
            tau: vec![1, 50],
            spare: vec![39],
            min_len: 10,
            len: 50,
        };
        assert_eq!(single.validate(), Ok(()));
    }

    #[test]
    fn reports_too_many_change_points() {
        let layout = SegmentLayout {
            tau: vec![1, 11, 21, 31, 41, 50],
            spare: vec![0, 0, 0, 0, 0],
            min_len: 10,
            len: 50,
        };
        assert_eq!(
            layout.validate(),
            Err(LayoutViolation::TooManyChangePoints { k: 4, k_star: 3 })
        );
    }

    #[test]
    fn reports_recursion_and_sum_failures() {
        let mut l = scenario1_cluster1();
        l.spare = vec![8, 6, 5];
        assert_eq!(l.validate(), Err(LayoutViolation::Recursion { l: 2 }));
        let l = SegmentLayout {
            tau: vec![1, 5, 50],
            spare: vec![0, 0],
            min_len: 10,
            len: 50,
        };
        assert!(l.validate().is_err());
        let l = SegmentLayout {
            tau: vec![2, 50],
            spare: vec![38],
            min_len: 10,
            len: 50,
        };
        assert_eq!(l.validate(), Err(LayoutViolation::TauEndpoints { m: 50 }));
        let l = SegmentLayout {
            tau: vec![1, 11],
            spare: vec![0],
            min_len: 10,
            len: 11,
        };
        assert_eq!(l.validate(), Err(LayoutViolation::NoRoom { m: 11, w: 10 }));
    }

    #[test]
    fn segment_ranges_close_last_segment_at_m() {
        let l = scenario1_cluster1();
        assert_eq!(l.segment_ranges(), vec![(0, 18), (18, 33), (33, 50)]);
        assert_eq!(l.segment_lengths(), vec![18, 15, 17]);
        assert_eq!(l.segment_of(0), 0);
        assert_eq!(l.segment_of(17), 0);
        assert_eq!(l.segment_of(18), 1);
        assert_eq!(l.segment_of(33), 2);
        assert_eq!(l.segment_of(49), 2);
    }

    #[test]
    fn segment_stats_small_example() {
        // segments {1..2}, {3..5}
        let layout = SegmentLayout::from_change_points(&[3], 1, 5).unwrap();
        let s = segment_stats(&[1.0, 1.0, 2.0, 2.0, 2.0], &layout).unwrap();
        assert_eq!(s.counts, vec![2, 3]);
        assert_eq!(s.sums, vec![2.0, 6.0]);
        let z = segment_stats(&[0.0; 5], &layout).unwrap();
        assert!(z.sums.iter().all(|&v| v == 0.0));
        assert_eq!(z.total_ss, 0.0);
        assert!(matches!(
            segment_stats(&[0.0; 4], &layout),
            Err(CpError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn noiseless_scenario_means_are_exact() {
        let mut y = vec![5.0; 18];
        y.extend(vec![20.0; 15]);
        y.extend(vec![10.0; 17]);
        let s = segment_stats(&y, &scenario1_cluster1()).unwrap();
        let means: Vec<f64> = s
            .sums
            .iter()
            .zip(&s.counts)
            .map(|(s, &c)| s / c as f64)
            .collect();
        assert_eq!(means, vec![5.0, 20.0, 10.0]);
        let rss = residual_ss(&y, &scenario1_cluster1(), &[5.0, 20.0, 10.0]).unwrap();
        assert!(rss.abs() < 1e-20);
    }

    #[test]
    fn residual_ss_small_example() {
        let layout = SegmentLayout::from_change_points(&[3], 1, 4).unwrap();
        let rss = residual_ss(&[0.0, 0.0, 2.0, 2.0], &layout, &[1.0, 1.0]).unwrap();
        assert!((rss - 4.0).abs() < 1e-12);
        assert!(residual_ss(&[0.0; 4], &layout, &[1.0]).is_err());
    }

    #[test]
    fn dataset_rejects_ragged_rows() {
        let err = SequenceDataset::from_rows(vec![vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert!(err.to_string().contains("row 2"));
        assert!(SequenceDataset::from_rows(vec![vec![1.0]]).is_err());
        assert!(SequenceDataset::from_rows(vec![vec![1.0, f64::NAN]]).is_err());
    }

    #[test]
    fn hyperparameters_validation() {
        let h = Hyperparameters::default();
        assert!(h.validate_for(50).is_ok());
        assert!(h.validate_for(11).is_err());
        let bad = Hyperparameters {
            b_sigma: 0.0,
            ..Hyperparameters::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn profile_fitted_and_mean() {
        let p = ClusterProfile::new(scenario1_cluster1(), vec![5.0, 20.0, 10.0]).unwrap();
        let f = p.fitted();
        assert_eq!(f.len(), 50);
        assert_eq!(f[17], 5.0);
        assert_eq!(f[18], 20.0);
        assert_eq!(f[33], 10.0);
        let expected = (18.0 * 5.0 + 15.0 * 20.0 + 17.0 * 10.0) / 50.0;
        assert!((p.mean_level() - expected).abs() < 1e-12);
    }
}
