// SPDX-License-Identifier: MIT OR Apache-2.0

//! Brute-force ground truth for tiny instances.
//!
//! Everything here goes through explicit design matrices and direct
//! enumeration of change-point tuples, sharing no arithmetic with the
//! diagonal fast path used by the sampler.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CpError, Result};
use crate::math::{ln_gamma, LN_2PI};
use crate::model::{Hyperparameters, SegmentLayout};

/// Largest sequence length accepted by the segmentation oracle.
pub const MAX_SEGMENTATION_M: usize = 14;
/// Largest instance accepted by the partition oracle.
pub const MAX_PARTITION_N: usize = 4;
pub const MAX_PARTITION_M: usize = 12;

/// Every admissible layout, found by trying every increasing tuple of
/// interior change points.
pub fn brute_force_layouts(m: usize, w: usize) -> Vec<SegmentLayout> {
    fn extend(prefix: &mut Vec<usize>, m: usize, w: usize, out: &mut Vec<Vec<usize>>) {
        let last = prefix.last().copied().unwrap_or(1);
        // closing segment [last, m] has m - last + 1 points
        if m + 1 - last >= w {
            out.push(prefix.clone());
        }
        for t in last + w..=m {
            prefix.push(t);
            extend(prefix, m, w, out);
            prefix.pop();
        }
    }
    let mut tuples = Vec::new();
    extend(&mut Vec::new(), m, w, &mut tuples);
    tuples
        .into_iter()
        .filter_map(|cps| SegmentLayout::from_change_points(&cps, w, m).ok())
        .collect()
}

/// `M x (K+1)` segment-indicator matrix.
pub fn design_matrix(layout: &SegmentLayout) -> DMatrix<f64> {
    let m = layout.len;
    let k1 = layout.num_segments();
    DMatrix::from_fn(m, k1, |b, l| {
        let start = layout.tau[l] - 1;
        let end = if l + 1 == k1 { m } else { layout.tau[l + 1] - 1 };
        if (start..end).contains(&b) {
            1.0
        } else {
            0.0
        }
    })
}

/// `(y - X alpha)^T (y - X alpha)`.
pub fn dense_residual_ss(y: &[f64], layout: &SegmentLayout, alpha: &[f64]) -> f64 {
    let x = design_matrix(layout);
    let r = DVector::from_column_slice(y) - x * DVector::from_column_slice(alpha);
    r.dot(&r)
}

/// `y^T y - y^T X (X^T X)^{-1} X^T y` and `log |X^T X|`.
fn dense_projection(y: &[f64], layout: &SegmentLayout) -> (f64, f64) {
    let x = design_matrix(layout);
    let yv = DVector::from_column_slice(y);
    let v = x.transpose() * &x;
    let xty = x.transpose() * &yv;
    let chol = v.clone().cholesky().expect("Gram matrix is positive definite");
    let sol = chol.solve(&xty);
    (yv.dot(&yv) - xty.dot(&sol), v.determinant().ln())
}

pub fn dense_log_h(y: &[f64], layout: &SegmentLayout, hyper: &Hyperparameters) -> f64 {
    let (b_resid, ln_det) = dense_projection(y, layout);
    let (a, b) = (hyper.a_sigma, hyper.b_sigma);
    let nu = (y.len() - layout.num_segments()) as f64 / 2.0;
    -nu * LN_2PI - 0.5 * ln_det - a * b.ln() - ln_gamma(a) + ln_gamma(nu + a)
        - (nu + a) * (b_resid.max(0.0) / 2.0 + 1.0 / b).ln()
}

/// `log integral prod_n N(y_n | X alpha, sigma2_n I) d alpha` by completing
/// the square with dense matrices.
pub fn dense_log_htilde(group: &[&[f64]], sigma2: &[f64], layout: &SegmentLayout) -> f64 {
    let x = design_matrix(layout);
    let m = layout.len;
    let k1 = layout.num_segments();
    let gram = x.transpose() * &x;
    let mut h = DVector::zeros(k1);
    let mut quad = 0.0;
    let mut prec = 0.0;
    let mut ln_s2 = 0.0;
    for (y, &s2) in group.iter().zip(sigma2) {
        let yv = DVector::from_column_slice(y);
        h += x.transpose() * &yv / s2;
        quad += yv.dot(&yv) / s2;
        prec += 1.0 / s2;
        ln_s2 += s2.ln();
    }
    let p = gram * prec;
    let sol = p.clone().lu().solve(&h).expect("nonsingular precision");
    let resid = quad - h.dot(&sol);
    -((group.len() * m) as f64) / 2.0 * LN_2PI - m as f64 / 2.0 * ln_s2 + k1 as f64 / 2.0 * LN_2PI
        - 0.5 * p.determinant().ln()
        - resid / 2.0
}

/// `(lambda^k / k!) / sum_{l=0}^{k*} lambda^l / l!` by direct products.
pub fn trunc_poisson_direct(k: usize, lambda: f64, k_star: usize) -> f64 {
    let term = |l: usize| (1..=l).fold(1.0, |acc, i| acc * lambda / i as f64);
    term(k) / (0..=k_star).map(term).sum::<f64>()
}

/// Symmetric multinomial probability by direct factorials.
pub fn multinomial_direct(m: &[usize]) -> f64 {
    let fact = |n: usize| (1..=n).fold(1.0, |acc, i| acc * i as f64);
    let m0: usize = m.iter().sum();
    let cells = m.len() as f64;
    fact(m0) / m.iter().map(|&x| fact(x)).product::<f64>() / cells.powi(m0 as i32)
}

/// Prior probability of a layout for a given `lambda`.
pub fn layout_prior(layout: &SegmentLayout, lambda: f64, k_star: usize) -> f64 {
    trunc_poisson_direct(layout.num_change_points(), lambda, k_star) * multinomial_direct(&layout.spare)
}

fn oracle_k_star(m: usize, w: usize, cap: Option<usize>) -> Result<usize> {
    let k = (0..m)
        .filter(|&k| m as i64 - 1 - ((k + 1) * w) as i64 > 0)
        .max()
        .ok_or(CpError::NoAdmissibleLayout { m, w })?;
    Ok(cap.map_or(k, |c| c.min(k)))
}

fn admissible_layouts(m: usize, hyper: &Hyperparameters) -> Result<(usize, Vec<SegmentLayout>)> {
    let k_star = oracle_k_star(m, hyper.w, hyper.k_max_override)?;
    let layouts = brute_force_layouts(m, hyper.w)
        .into_iter()
        .filter(|l| l.num_change_points() <= k_star)
        .collect();
    Ok((k_star, layouts))
}

fn normalize(mut table: Vec<(SegmentLayout, f64)>) -> Vec<(SegmentLayout, f64)> {
    let max = table.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = table.iter().map(|e| (e.1 - max).exp()).sum();
    for e in &mut table {
        e.1 = (e.1 - max).exp() / total;
    }
    table
}

/// Posterior over layouts of one sequence with the levels and the variance
/// integrated out.
pub fn exact_segmentation_posterior(
    y: &[f64],
    hyper: &Hyperparameters,
    lambda: f64,
) -> Result<Vec<(SegmentLayout, f64)>> {
    if y.len() > MAX_SEGMENTATION_M {
        return Err(CpError::InstanceTooLarge(format!(
            "M = {} exceeds {MAX_SEGMENTATION_M}",
            y.len()
        )));
    }
    let (k_star, layouts) = admissible_layouts(y.len(), hyper)?;
    Ok(normalize(
        layouts
            .into_iter()
            .map(|l| {
                let w = dense_log_h(y, &l, hyper) + layout_prior(&l, lambda, k_star).ln();
                (l, w)
            })
            .collect(),
    ))
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            prefix.push(l);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        grow(&mut Vec::new(), n, &mut out);
    }
    out
}

/// Chinese-restaurant log-probability of a labeled partition.
pub fn crp_log_prob(partition: &[usize], alpha0: f64) -> f64 {
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in partition {
        *sizes.entry(c).or_default() += 1;
    }
    let l = sizes.len() as f64;
    l * alpha0.ln() + sizes.values().map(|&s| ln_gamma(s as f64)).sum::<f64>()
        - (0..partition.len()).map(|i| (alpha0 + i as f64).ln()).sum::<f64>()
}

/// One cell of the joint posterior over partitions and block layouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    /// Restricted growth string.
    pub partition: Vec<usize>,
    /// Layout of each block, in block order.
    pub layouts: Vec<SegmentLayout>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPosterior {
    pub cells: Vec<PartitionCell>,
}

impl PartitionPosterior {
    /// Probability of each partition, layouts summed out.
    pub fn partition_marginal(&self) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        for c in &self.cells {
            *out.entry(c.partition.clone()).or_insert(0.0) += c.prob;
        }
        out
    }

    pub fn joint(&self) -> BTreeMap<(Vec<usize>, Vec<SegmentLayout>), f64> {
        self.cells
            .iter()
            .map(|c| ((c.partition.clone(), c.layouts.clone()), c.prob))
            .collect()
    }
}

/// Joint posterior over set partitions and layouts with variances, `lambda`
/// and `alpha0` held fixed.
pub fn exact_partition_posterior(
    data: &[&[f64]],
    hyper: &Hyperparameters,
    sigma2: &[f64],
    lambda: f64,
    alpha0: f64,
) -> Result<PartitionPosterior> {
    let n = data.len();
    if n == 0 || n > MAX_PARTITION_N {
        return Err(CpError::InstanceTooLarge(format!(
            "N = {n} must lie in 1..={MAX_PARTITION_N}"
        )));
    }
    let m = data[0].len();
    if m > MAX_PARTITION_M {
        return Err(CpError::InstanceTooLarge(format!(
            "M = {m} exceeds {MAX_PARTITION_M}"
        )));
    }
    if sigma2.len() != n {
        return Err(CpError::LengthMismatch {
            expected: n,
            actual: sigma2.len(),
        });
    }
    let (k_star, layouts) = admissible_layouts(m, hyper)?;
    let log_prior: Vec<f64> = layouts
        .iter()
        .map(|l| layout_prior(l, lambda, k_star).ln())
        .collect();
    let mut cells: Vec<(Vec<usize>, Vec<usize>, f64)> = Vec::new();
    for part in set_partitions(n) {
        let blocks = part.iter().max().unwrap() + 1;
        // per-block, per-layout log weight
        let block_w: Vec<Vec<f64>> = (0..blocks)
            .map(|r| {
                let rows: Vec<&[f64]> = (0..n).filter(|&i| part[i] == r).map(|i| data[i]).collect();
                let s2: Vec<f64> = (0..n).filter(|&i| part[i] == r).map(|i| sigma2[i]).collect();
                layouts
                    .iter()
                    .zip(&log_prior)
                    .map(|(l, p)| dense_log_htilde(&rows, &s2, l) + p)
                    .collect()
            })
            .collect();
        let crp = crp_log_prob(&part, alpha0);
        let mut idx = vec![0usize; blocks];
        loop {
            let w = crp + idx.iter().enumerate().map(|(r, &i)| block_w[r][i]).sum::<f64>();
            cells.push((part.clone(), idx.clone(), w));
            // odometer over layouts per block
            let mut pos = 0;
            while pos < blocks {
                idx[pos] += 1;
                if idx[pos] < layouts.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == blocks {
                break;
            }
        }
    }
    let max = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = cells.iter().map(|c| (c.2 - max).exp()).sum();
    Ok(PartitionPosterior {
        cells: cells
            .into_iter()
            .map(|(partition, idx, w)| PartitionCell {
                partition,
                layouts: idx.iter().map(|&i| layouts[i].clone()).collect(),
                prob: (w - max).exp() / total,
            })
            .collect(),
    })
}

/// Half the L1 distance between two tables over the union of their keys.
pub fn tv_distance<K: Ord + Clone>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut keys: Vec<&K> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Relative frequencies of `items`.
pub fn empirical<K: Ord, I: IntoIterator<Item = K>>(items: I) -> BTreeMap<K, f64> {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    let mut n = 0usize;
    for it in items {
        *counts.entry(it).or_default() += 1;
        n += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / n as f64))
        .collect()
}
