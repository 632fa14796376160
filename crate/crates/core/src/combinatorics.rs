// SPDX-License-Identifier: MIT OR Apache-2.0

//! The segmentation prior: truncated Poisson on the number of change points,
//! symmetric multinomial on the spare lengths, and enumeration (or uniform
//! subsampling) of the weak compositions that index candidate layouts.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{CpError, Result};
use crate::math::{ln_factorial, log_sum_exp};
use crate::model::{LayoutViolation, SegmentLayout};

/// Spaces at or below this size are subsampled exactly without replacement;
/// larger ones fall back to i.i.d. uniform draws with duplicates discarded.
const WITHOUT_REPLACEMENT_LIMIT: u128 = 1 << 48;

/// `max { k : M - 1 - (k+1) w > 0 }`, or `None` when even `k = 0` fails.
pub fn structural_max_changepoints(m: usize, w: usize) -> Option<usize> {
    if w == 0 || m < 2 {
        return None;
    }
    // (k + 1) w <= M - 2
    let slots = (m - 2) / w;
    slots.checked_sub(1)
}

/// Largest admissible number of change points, optionally capped.
pub fn max_changepoints(m: usize, w: usize, cap: Option<usize>) -> Result<usize> {
    let k_star = structural_max_changepoints(m, w).ok_or(CpError::NoAdmissibleLayout { m, w })?;
    Ok(cap.map_or(k_star, |c| c.min(k_star)))
}

/// `log sum_{l=0}^{k*} lambda^l / l!`.
pub fn trunc_poisson_log_normalizer(lambda: f64, k_star: usize) -> f64 {
    let ln_lambda = lambda.ln();
    let terms: Vec<f64> = (0..=k_star)
        .map(|l| l as f64 * ln_lambda - ln_factorial(l))
        .collect();
    log_sum_exp(&terms)
}

/// Log-probabilities of `K = 0..=k*` under the truncated Poisson.
pub fn trunc_poisson_log_pmfs(lambda: f64, k_star: usize) -> Vec<f64> {
    let ln_lambda = lambda.ln();
    let terms: Vec<f64> = (0..=k_star)
        .map(|l| l as f64 * ln_lambda - ln_factorial(l))
        .collect();
    let norm = log_sum_exp(&terms);
    terms.into_iter().map(|t| t - norm).collect()
}

pub fn trunc_poisson_logpmf(k: usize, lambda: f64, k_star: usize) -> Result<f64> {
    if k > k_star {
        return Err(CpError::OutOfRange(format!("k = {k} exceeds k* = {k_star}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(CpError::OutOfRange(format!("lambda = {lambda}")));
    }
    Ok(k as f64 * lambda.ln() - ln_factorial(k) - trunc_poisson_log_normalizer(lambda, k_star))
}

/// `log [ m0! / prod m_l! * (1/(k+1))^m0 ]` for a composition `m` of `m0`
/// into `k + 1` cells.
pub fn multinomial_logcoef(m: &[usize]) -> f64 {
    let m0: usize = m.iter().sum();
    let cells = m.len() as f64;
    ln_factorial(m0) - m.iter().map(|&x| ln_factorial(x)).sum::<f64>() - m0 as f64 * cells.ln()
}

/// Number of weak compositions of `m0` into `parts` cells, `C(m0+parts-1, parts-1)`.
/// Returns `None` on `u128` overflow.
pub fn composition_count(m0: usize, parts: usize) -> Option<u128> {
    if parts == 0 {
        return Some(u128::from(m0 == 0));
    }
    binomial((m0 + parts - 1) as u128, (parts - 1) as u128)
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Colexicographic order: compare from the last cell backwards.
pub fn colex_cmp(a: &[usize], b: &[usize]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Iterator over the weak compositions of `m0` into `parts` cells in
/// ascending colexicographic order, starting at `(m0, 0, ..., 0)`.
#[derive(Debug, Clone)]
pub struct WeakCompositions {
    current: Option<Vec<usize>>,
}

impl WeakCompositions {
    pub fn new(m0: usize, parts: usize) -> Self {
        let current = (parts > 0).then(|| {
            let mut c = vec![0; parts];
            c[0] = m0;
            c
        });
        Self { current }
    }
}

impl Iterator for WeakCompositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let parts = out.len();
        if let Some(i) = out.iter().position(|&x| x > 0).filter(|&i| i + 1 < parts) {
            let mut next = out.clone();
            let v = next[i];
            next[i] = 0;
            next[0] = v - 1;
            next[i + 1] += 1;
            self.current = Some(next);
        }
        Some(out)
    }
}

/// The `rank`-th composition (0-based) in colexicographic order.
pub fn unrank_composition(m0: usize, parts: usize, mut rank: u128) -> Result<Vec<usize>> {
    let total = composition_count(m0, parts)
        .ok_or_else(|| CpError::OutOfRange("composition space overflows u128".into()))?;
    if rank >= total {
        return Err(CpError::OutOfRange(format!(
            "rank {rank} out of {total} compositions"
        )));
    }
    let mut c = vec![0; parts];
    let mut remaining = m0;
    for j in (1..parts).rev() {
        let mut t = 0;
        loop {
            // compositions of remaining - t into j cells
            let block = composition_count(remaining - t, j).expect("bounded by total");
            if rank < block {
                break;
            }
            rank -= block;
            t += 1;
        }
        c[j] = t;
        remaining -= t;
    }
    c[0] = remaining;
    Ok(c)
}

/// A set of compositions in colexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionSet {
    pub items: Vec<Vec<usize>>,
    pub exhaustive: bool,
}

/// All weak compositions of `m0` into `parts` cells when there are at most
/// `budget` of them; otherwise `budget` distinct compositions drawn uniformly.
pub fn compositions<R: Rng + ?Sized>(
    m0: usize,
    parts: usize,
    budget: usize,
    rng: &mut R,
) -> CompositionSet {
    let total = composition_count(m0, parts);
    match total {
        Some(t) if t <= budget as u128 => CompositionSet {
            items: WeakCompositions::new(m0, parts).collect(),
            exhaustive: true,
        },
        Some(t) if t <= WITHOUT_REPLACEMENT_LIMIT => {
            let mut ranks: Vec<usize> = rand::seq::index::sample(rng, t as usize, budget).into_vec();
            ranks.sort_unstable();
            CompositionSet {
                items: ranks
                    .into_iter()
                    .map(|r| unrank_composition(m0, parts, r as u128).expect("rank in range"))
                    .collect(),
                exhaustive: false,
            }
        }
        _ => {
            let mut seen = BTreeSet::new();
            while seen.len() < budget {
                seen.insert(ColexKey(uniform_composition(m0, parts, rng)));
            }
            CompositionSet {
                items: seen.into_iter().map(|k| k.0).collect(),
                exhaustive: false,
            }
        }
    }
}

/// One composition drawn uniformly via a random stars-and-bars placement.
pub fn uniform_composition<R: Rng + ?Sized>(m0: usize, parts: usize, rng: &mut R) -> Vec<usize> {
    let slots = m0 + parts - 1;
    let mut bars = rand::seq::index::sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for b in bars {
        out.push(b - prev);
        prev = b + 1;
    }
    out.push(slots - prev);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ColexKey(Vec<usize>);

impl PartialOrd for ColexKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ColexKey {
    fn cmp(&self, other: &Self) -> Ordering {
        colex_cmp(&self.0, &other.0)
    }
}

/// `tau_0 = 1`, `tau_l = m_l + tau_{l-1} + w`, `tau_{K+1} = M`.
pub fn layout_from_lengths(spare: &[usize], w: usize, m: usize) -> Result<SegmentLayout> {
    if spare.is_empty() {
        return Err(CpError::OutOfRange("need at least one segment".into()));
    }
    let k = spare.len() - 1;
    let m0 = (m + 1)
        .checked_sub(2 + (k + 1) * w)
        .ok_or(CpError::NoAdmissibleLayout { m, w })?;
    let total: usize = spare.iter().sum();
    if total != m0 {
        return Err(LayoutViolation::SpareSum {
            expected: m0,
            actual: total,
        }
        .into());
    }
    let mut tau = Vec::with_capacity(k + 2);
    tau.push(1);
    for &s in spare {
        let prev = *tau.last().unwrap();
        tau.push(prev + s + w);
    }
    let layout = SegmentLayout {
        tau,
        spare: spare.to_vec(),
        min_len: w,
        len: m,
    };
    layout.validate()?;
    Ok(layout)
}

pub fn lengths_from_layout(layout: &SegmentLayout) -> Vec<usize> {
    layout
        .tau
        .windows(2)
        .map(|t| t[1] - t[0] - layout.min_len)
        .collect()
}

/// Candidate layouts with a fixed number of change points `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutFamily {
    pub k: usize,
    pub m0: usize,
    pub exhaustive: bool,
    spares: Vec<usize>,
    log_coef: Vec<f64>,
}

impl LayoutFamily {
    fn new(k: usize, m0: usize, set: CompositionSet) -> Self {
        let log_coef = set.items.iter().map(|c| multinomial_logcoef(c)).collect();
        Self {
            k,
            m0,
            exhaustive: set.exhaustive,
            spares: set.items.into_iter().flatten().collect(),
            log_coef,
        }
    }

    pub fn len(&self) -> usize {
        self.log_coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_coef.is_empty()
    }

    pub fn spare(&self, i: usize) -> &[usize] {
        let p = self.k + 1;
        &self.spares[i * p..(i + 1) * p]
    }

    /// Multinomial log-probability of composition `i`.
    pub fn log_coef(&self, i: usize) -> f64 {
        self.log_coef[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.spares.chunks_exact(self.k + 1)
    }

    /// Whether `spare` is one of the family's compositions.
    pub fn contains(&self, spare: &[usize]) -> bool {
        if spare.len() != self.k + 1 {
            return false;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match colex_cmp(self.spare(mid), spare) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Writes 0-based segment boundaries `[0, ..., M]` for `spare` into `out`.
#[inline]
pub fn spare_to_bounds(spare: &[usize], w: usize, m: usize, out: &mut Vec<usize>) {
    out.clear();
    out.push(0);
    let mut b = 0;
    for &s in &spare[..spare.len() - 1] {
        b += s + w;
        out.push(b);
    }
    out.push(m);
}

/// Every candidate layout for sequences of length `M`, grouped by `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutCatalog {
    pub m: usize,
    pub w: usize,
    pub k_star: usize,
    pub budget: usize,
    families: Vec<LayoutFamily>,
}

impl LayoutCatalog {
    pub fn build<R: Rng + ?Sized>(
        m: usize,
        w: usize,
        k_star: usize,
        budget: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let structural = max_changepoints(m, w, None)?;
        if k_star > structural {
            return Err(CpError::OutOfRange(format!(
                "k* = {k_star} exceeds the structural maximum {structural}"
            )));
        }
        let families = (0..=k_star)
            .map(|k| {
                let m0 = m - 1 - (k + 1) * w;
                LayoutFamily::new(k, m0, compositions(m0, k + 1, budget, rng))
            })
            .collect();
        Ok(Self {
            m,
            w,
            k_star,
            budget,
            families,
        })
    }

    /// Whether any family was subsampled.
    pub fn is_exhaustive(&self) -> bool {
        self.families.iter().all(|f| f.exhaustive)
    }

    pub fn families(&self) -> &[LayoutFamily] {
        &self.families
    }

    pub fn family(&self, k: usize) -> &LayoutFamily {
        &self.families[k]
    }

    pub fn total_layouts(&self) -> usize {
        self.families.iter().map(LayoutFamily::len).sum()
    }

    pub fn layout(&self, k: usize, i: usize) -> SegmentLayout {
        layout_from_lengths(self.families[k].spare(i), self.w, self.m)
            .expect("catalog compositions are valid layouts")
    }

    /// Draws fresh subsamples for the non-exhaustive families.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for fam in self.families.iter_mut().filter(|f| !f.exhaustive) {
            *fam = LayoutFamily::new(fam.k, fam.m0, compositions(fam.m0, fam.k + 1, self.budget, rng));
        }
    }
}
