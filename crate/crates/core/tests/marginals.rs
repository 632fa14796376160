use std::collections::BTreeMap;

use cpclust::combinatorics::{
    layout_from_lengths, max_changepoints, structural_max_changepoints, uniform_composition,
    LayoutCatalog,
};
use cpclust::marginals::*;
use cpclust::math::ln_gamma;
use cpclust::model::{ClusterProfile, Hyperparameters, SegmentLayout};
use cpclust::oracle::{
    brute_force_layouts, dense_log_h, dense_log_htilde, exact_segmentation_posterior, layout_prior,
    tv_distance,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LN_2PI: f64 = 1.8378770664093453;

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn inv_gamma_pdf(x: f64, a: f64, b: f64) -> f64 {
    // shape a, rate 1/b
    (-a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - 1.0 / (b * x)).exp()
}

fn gauss_lik(y: &[f64], mean: &[f64], s2: f64) -> f64 {
    let q: f64 = y.iter().zip(mean).map(|(a, b)| (a - b).powi(2)).sum();
    (-(y.len() as f64) / 2.0 * (LN_2PI + s2.ln()) - q / (2.0 * s2)).exp()
}

fn toy_hyper(a: f64, b: f64, w: usize) -> Hyperparameters {
    Hyperparameters {
        a_sigma: a,
        b_sigma: b,
        ..Hyperparameters::default().with_min_len(w)
    }
}

#[test]
fn log_h_matches_two_dimensional_quadrature() {
    // Smallest admissible K = 0 instance: M = 3, w = 1.
    let y = [0.4, -0.3, 0.9];
    let layout = SegmentLayout::single(1, 3).unwrap();
    for (a, b) in [(3.0f64, 0.5f64), (2.0, 1000.0), (2.5, 4.0)] {
        let h = toy_hyper(a, b, 1);
        let ybar = y.iter().sum::<f64>() / 3.0;
        let integral = simpson(
            |t| {
                let s2 = t.exp();
                let half = 14.0 * (s2 / 3.0).sqrt();
                let inner = simpson(|al| gauss_lik(&y, &[al; 3], s2), ybar - half, ybar + half, 400);
                inner * inv_gamma_pdf(s2, a, b) * s2
            },
            -30.0,
            30.0,
            6000,
        );
        let got = log_h(&y, &layout, &h).unwrap().exp();
        assert!(
            ((got - integral) / integral).abs() < 1e-6,
            "a={a} b={b}: {got} vs {integral}"
        );
    }
}

#[test]
fn log_qj_matches_one_dimensional_quadrature() {
    let layout = SegmentLayout::from_change_points(&[4], 2, 7).unwrap();
    let profile = ClusterProfile::new(layout, vec![0.1, 2.0]).unwrap();
    let y = [0.3, -0.2, 0.0, 2.2, 1.7, 2.4, 2.1];
    let fitted = profile.fitted();
    for (a, b) in [(2.0f64, 1000.0f64), (3.0, 0.5)] {
        let h = toy_hyper(a, b, 2);
        let integral = simpson(
            |t| {
                let s2 = t.exp();
                gauss_lik(&y, &fitted, s2) * inv_gamma_pdf(s2, a, b) * s2
            },
            -30.0,
            30.0,
            20_000,
        );
        let got = log_qj(&y, &profile, &h, 3).unwrap();
        let expected = 3f64.ln() + integral.ln();
        assert!(((got - expected) / expected).abs() < 1e-6, "{got} vs {expected}");
    }
    assert!(log_qj(&y, &profile, &Hyperparameters::default(), 0).is_err());
}

#[test]
fn log_qj_is_closed_form_at_zero_rss() {
    let layout = SegmentLayout::from_change_points(&[4], 2, 7).unwrap();
    let profile = ClusterProfile::new(layout, vec![1.0, 3.0]).unwrap();
    let y = profile.fitted();
    let h = Hyperparameters::default().with_min_len(2);
    let (a, b, m): (f64, f64, f64) = (2.0, 1000.0, 7.0);
    let expected = ln_gamma(m / 2.0 + a) - a * b.ln() - m / 2.0 * LN_2PI - ln_gamma(a)
        - (m / 2.0 + a) * (1.0 / b).ln();
    assert!((log_qj(&y, &profile, &h, 1).unwrap() - expected).abs() < 1e-10);
}

#[test]
fn single_member_htilde_matches_level_quadrature() {
    let y = [0.5, 0.1, 0.3, 1.6, 2.0, 1.4];
    let s2 = 0.35;
    let single = SegmentLayout::single(2, 6).unwrap();
    let integral = simpson(|al| gauss_lik(&y, &[al; 6], s2), -6.0, 7.0, 4000);
    let got = log_htilde(&[&y], &[s2], &single).unwrap();
    assert!(((got.exp() - integral) / integral).abs() < 1e-8);

    let two = SegmentLayout::from_change_points(&[4], 2, 6).unwrap();
    let integral = simpson(
        |a1| {
            simpson(
                |a2| gauss_lik(&y, &[a1, a1, a1, a2, a2, a2], s2),
                -4.0,
                8.0,
                600,
            )
        },
        -5.0,
        6.0,
        600,
    );
    let got = log_htilde(&[&y], &[s2], &two).unwrap();
    assert!(((got.exp() - integral) / integral).abs() < 1e-6);
}

#[test]
fn identical_pair_matches_dense_oracle() {
    let y = [0.2, -0.4, 0.1, 2.0, 2.6, 1.9, 2.2];
    let layout = SegmentLayout::from_change_points(&[4], 2, 7).unwrap();
    let fast = log_htilde(&[&y, &y], &[0.5, 0.5], &layout).unwrap();
    let dense = dense_log_htilde(&[&y, &y], &[0.5, 0.5], &layout);
    assert!(((fast - dense) / dense).abs() < 1e-10);
}

#[test]
fn duplicated_segments_match_dense_oracle() {
    let y = [0.3, 0.1, -0.2, 1.9, 2.2, 2.0, 2.4];
    let layout = SegmentLayout::from_change_points(&[4], 2, 7).unwrap();
    let mut y2 = Vec::new();
    for (s, e) in layout.segment_ranges() {
        y2.extend_from_slice(&y[s..e]);
        y2.extend_from_slice(&y[s..e]);
    }
    let lens: Vec<usize> = layout.segment_lengths().iter().map(|l| 2 * l).collect();
    let cps = vec![1 + lens[0]];
    let layout2 = SegmentLayout::from_change_points(&cps, 2, 14).unwrap();
    let h = Hyperparameters::default().with_min_len(2);
    let fast = log_h(&y2, &layout2, &h).unwrap();
    let dense = dense_log_h(&y2, &layout2, &h);
    assert!(((fast - dense) / dense).abs() < 1e-10);
}

#[test]
fn exact_step_data_has_zero_residual() {
    let layout = SegmentLayout::from_change_points(&[4], 2, 7).unwrap();
    let y = ClusterProfile::new(layout.clone(), vec![1.0, 4.0]).unwrap().fitted();
    let h = Hyperparameters::default().with_min_len(2);
    let nu = (7.0 - 2.0) / 2.0;
    let expected = -nu * LN_2PI - 0.5 * (3f64.ln() + 4f64.ln()) - 2.0 * 1000f64.ln() - ln_gamma(2.0)
        + ln_gamma(nu + 2.0)
        - (nu + 2.0) * (1.0f64 / 1000.0).ln();
    assert!((log_h(&y, &layout, &h).unwrap() - expected).abs() < 1e-10);
}

fn m7_data() -> [f64; 7] {
    [0.1, -0.4, 0.3, 1.2, 0.6, 1.4, 0.9]
}

#[test]
fn log_q0_matches_direct_summation() {
    let y = m7_data();
    let h = Hyperparameters::default().with_min_len(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let k_star = max_changepoints(7, 2, None).unwrap();
    assert_eq!(k_star, 1);
    let cat = LayoutCatalog::build(7, 2, k_star, 1000, &mut rng).unwrap();
    for (lambda, alpha0) in [(1.0, 1.0), (0.3, 2.5), (4.0, 0.01)] {
        let (got, _) = log_q0(&y, &h, lambda, alpha0, &cat).unwrap();
        let direct: f64 = brute_force_layouts(7, 2)
            .iter()
            .map(|l| alpha0 * layout_prior(l, lambda, k_star) * dense_log_h(&y, l, &h).exp())
            .sum();
        assert!((got - direct.ln()).abs() < 1e-10, "{got} vs {}", direct.ln());
    }
    let (a, _) = log_q0(&y, &h, 1.0, 1.0, &cat).unwrap();
    let (b, _) = log_q0(&y, &h, 1.0, 2.0, &cat).unwrap();
    assert!((b - a - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn log_q0_with_k_star_zero_is_log_h() {
    let y = m7_data();
    let h = Hyperparameters {
        k_max_override: Some(0),
        ..Hyperparameters::default().with_min_len(2)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let cat = LayoutCatalog::build(7, 2, 0, 1000, &mut rng).unwrap();
    let (q0, _) = log_q0(&y, &h, 1.7, 0.4, &cat).unwrap();
    let lh = log_h(&y, &SegmentLayout::single(2, 7).unwrap(), &h).unwrap();
    assert!((q0 - (0.4f64.ln() + lh)).abs() < 1e-12);
}

#[test]
fn log_v_k_marginal_matches_enumeration() {
    let y = m7_data();
    let s2 = 0.2;
    let lambda = 1.0;
    let layouts = brute_force_layouts(7, 2);
    let pk_fast = {
        let mut by_k: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for l in &layouts {
            let lv = log_v(&[&y], l, &[s2]).unwrap()
                + cpclust::combinatorics::trunc_poisson_logpmf(l.num_change_points(), lambda, 1).unwrap();
            by_k.entry(l.num_change_points()).or_default().push(lv);
        }
        let lse: Vec<f64> = by_k.values().map(|v| cpclust::math::log_sum_exp(v)).collect();
        cpclust::math::normalize_log_weights(&lse)
    };
    let mut pk_exact = [0.0; 2];
    let mut total = 0.0;
    for l in &layouts {
        let w = layout_prior(l, lambda, 1) * dense_log_htilde(&[&y], &[s2], l).exp();
        pk_exact[l.num_change_points()] += w;
        total += w;
    }
    for k in 0..2 {
        assert!((pk_fast[k] - pk_exact[k] / total).abs() < 1e-10);
    }
    // K = 0: multinomial term vanishes
    let single = SegmentLayout::single(2, 7).unwrap();
    assert_eq!(
        log_v(&[&y], &single, &[s2]).unwrap(),
        log_htilde(&[&y], &[s2], &single).unwrap()
    );
}

#[test]
fn new_profile_with_single_layout_has_conjugate_levels() {
    let y = m7_data();
    let h = Hyperparameters {
        k_max_override: Some(0),
        ..Hyperparameters::default().with_min_len(2)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cat = LayoutCatalog::build(7, 2, 0, 1000, &mut rng).unwrap();
    let (_, table) = log_q0(&y, &h, 1.0, 1.0, &cat).unwrap();
    let s2 = 0.3;
    let n = 40_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let (p, used) = sample_new_profile(&y, &h, Some(s2), &table, &cat, 1.0, &mut rng).unwrap();
            assert_eq!(used, s2);
            assert_eq!(p.layout.num_change_points(), 0);
            p.levels[0]
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (mu, v) = (y.iter().sum::<f64>() / 7.0, s2 / 7.0);
    assert!((mean - mu).abs() < 3.0 * (v / n as f64).sqrt());
    // var of sample variance ~ 2 v^2 / n
    assert!((var - v).abs() < 3.0 * v * (2.0 / n as f64).sqrt());
}

#[test]
fn new_profile_k_frequencies_match_exact_posterior() {
    let y = m7_data();
    let h = Hyperparameters::default().with_min_len(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cat = LayoutCatalog::build(7, 2, 1, 1000, &mut rng).unwrap();
    let (_, table) = log_q0(&y, &h, 1.0, 1.0, &cat).unwrap();
    let exact = exact_segmentation_posterior(&y, &h, 1.0).unwrap();
    let mut exact_k: BTreeMap<usize, f64> = BTreeMap::new();
    for (l, p) in &exact {
        *exact_k.entry(l.num_change_points()).or_default() += p;
    }
    let n = 50_000;
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for _ in 0..n {
        let (p, _) = sample_new_profile(&y, &h, None, &table, &cat, 1.0, &mut rng).unwrap();
        *counts.entry(p.layout.num_change_points()).or_default() += 1.0 / n as f64;
    }
    let tv = tv_distance(&counts, &exact_k);
    assert!(tv < 0.02, "TV = {tv}");
}

#[test]
fn new_profile_is_seed_deterministic() {
    let y = m7_data();
    let h = Hyperparameters::default().with_min_len(2);
    let cat = LayoutCatalog::build(7, 2, 1, 1000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let (_, table) = log_q0(&y, &h, 1.0, 1.0, &cat).unwrap();
    let a = sample_new_profile(&y, &h, None, &table, &cat, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = sample_new_profile(&y, &h, None, &table, &cat, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn normalized_q_weights_sum_to_one() {
    let y = m7_data();
    let h = Hyperparameters::default().with_min_len(2);
    let cat = LayoutCatalog::build(7, 2, 1, 1000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let (q0, _) = log_q0(&y, &h, 1.0, 1.0, &cat).unwrap();
    let layout = SegmentLayout::from_change_points(&[4], 2, 7).unwrap();
    let mut w = vec![q0];
    for (lv, size) in [(vec![0.0, 1.0], 2), (vec![5.0, -3.0], 4)] {
        let p = ClusterProfile::new(layout.clone(), lv).unwrap();
        w.push(log_qj(&y, &p, &h, size).unwrap());
    }
    let p = cpclust::math::normalize_log_weights(&w);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn random_group(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    w: usize,
) -> (Vec<Vec<f64>>, Vec<f64>, SegmentLayout) {
    let k_star = structural_max_changepoints(m, w).unwrap();
    let k = rng.random_range(0..=k_star);
    let spare = uniform_composition(m - 1 - (k + 1) * w, k + 1, rng);
    let layout = layout_from_lengths(&spare, w, m).unwrap();
    let shift = rng.random_range(-50.0..50.0);
    let rows = (0..n)
        .map(|_| (0..m).map(|_| shift + rng.random_range(-3.0..3.0)).collect())
        .collect();
    let s2 = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
    (rows, s2, layout)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn fast_path_matches_dense(seed in 0u64..1_000_000, n in 1usize..=5, m in 6usize..=30, w in 1usize..=4) {
        prop_assume!(structural_max_changepoints(m, w).is_some());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, s2, layout) = random_group(&mut rng, n, m, w);
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let h = Hyperparameters::default().with_min_len(w);
        let fast = log_h(&rows[0], &layout, &h).unwrap();
        let dense = dense_log_h(&rows[0], &layout, &h);
        prop_assert!(((fast - dense) / dense).abs() < 1e-10, "log_H {} vs {}", fast, dense);
        let fast = log_htilde(&refs, &s2, &layout).unwrap();
        let dense = dense_log_htilde(&refs, &s2, &layout);
        prop_assert!(((fast - dense) / dense).abs() < 1e-10, "log_Htilde {} vs {}", fast, dense);
        prop_assert!(fast.is_finite());
    }
}
