// SPDX-License-Identifier: MIT OR Apache-2.0

//! Log-space helpers and categorical sampling.

use rand::Rng;

pub use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log(sum(exp(xs)))`, returning `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Numerically stable `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Normalized probabilities from unnormalized log-weights.
pub fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_w);
    log_w.iter().map(|w| (w - lse).exp()).collect()
}

/// Draw an index with probability proportional to `exp(log_w[i])`.
///
/// Uses inversion of the normalized CDF with a single uniform, so the number
/// of random numbers consumed is always one regardless of the input size.
///
/// Panics if every weight is `-inf` or any weight is NaN.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        max.is_finite(),
        "categorical draw needs at least one finite log-weight"
    );
    let mut total = 0.0;
    let cumulative: Vec<f64> = log_w
        .iter()
        .map(|w| {
            assert!(!w.is_nan(), "NaN log-weight");
            total += (w - max).exp();
            total
        })
        .collect();
    let u: f64 = rng.random::<f64>() * total;
    let idx = cumulative.partition_point(|&c| c <= u);
    // u < total always, but guard the rounding edge and skip zero-mass tail cells.
    let mut idx = idx.min(log_w.len() - 1);
    while log_w[idx] == f64::NEG_INFINITY && idx > 0 {
        idx -= 1;
    }
    idx
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0)
}
