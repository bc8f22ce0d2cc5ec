mod common;

use common::*;
use ctbn::evidence::{Evidence, EvidenceSegment, Subsystem};
use ctbn::inference::{
    convolution_integrals, forward_backward, infer, smoothed_marginal, FlatStatistics,
    DEFAULT_TOLERANCE,
};
use ctbn::markov::{
    matrix_exponential, sample_trajectory, IntensityKind, IntensityMatrix, StateDistribution,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n * n).map(|i| m[(i / n, i % n)]).collect()
}

fn flat_rows(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

fn two_state_example() -> (IntensityMatrix, StateDistribution, Evidence) {
    let q = IntensityMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]], IntensityKind::Proper)
        .unwrap();
    let p0 = StateDistribution::point_mass(2, 0);
    let ev = Evidence::new(vec![
        EvidenceSegment {
            subsystem: Subsystem::all(2),
            start: 0.0,
            end: 1.0,
        },
        EvidenceSegment {
            subsystem: Subsystem::singleton(2, 1),
            start: 1.0,
            end: 1.0,
        },
    ])
    .unwrap();
    (q, p0, ev)
}

#[test]
fn random_evidence_matches_discretised_chain() {
    let mut r = rng(11);
    for case in 0..24 {
        let n = 2 + case % 5;
        let q = random_intensity(&mut r, n, 0.1, 10.0);
        let p0 = random_distribution(&mut r, n);
        let ev = random_evidence(&mut r, n, 8);
        let stats = infer(&q, &p0, &ev, DEFAULT_TOLERANCE).unwrap();
        let oracle = extrapolated_oracle(&q, &p0, &ev, 1e-4);
        let dwell_err = rel_err(stats.dwell.as_slice(), &oracle.dwell);
        let trans_err = rel_err(&flat(&stats.transitions), &flat_rows(&oracle.transitions));
        assert!(dwell_err < 1e-3, "case {case}: dwell error {dwell_err}");
        assert!(trans_err < 1e-3, "case {case}: transition error {trans_err}");
        let total: f64 = stats.dwell.iter().sum();
        assert!((total - ev.horizon()).abs() < 1e-6);

        let cache = forward_backward(&q, &p0, &ev).unwrap();
        for k in [0usize, 7, 13] {
            let idx = 2 * ((k * oracle.marginals.len()) / 40);
            let t = idx as f64 * oracle.step;
            let smoothed = smoothed_marginal(&cache, &q, &ev, t).unwrap();
            let err = rel_err(smoothed.probs(), &oracle.marginals[idx]);
            assert!(err < 1e-3, "case {case}: marginal at {t} off by {err}");
        }
    }
}

#[test]
fn forward_and_backward_agree_at_every_boundary() {
    let mut r = rng(12);
    for case in 0..40 {
        let n = 2 + case % 5;
        let q = random_intensity(&mut r, n, 0.1, 10.0);
        let p0 = random_distribution(&mut r, n);
        let ev = random_evidence(&mut r, n, 8);
        let cache = forward_backward(&q, &p0, &ev).unwrap();
        let lp = cache.log_likelihood();
        assert!((lp - cache.backward_log_likelihood()).abs() <= 1e-8 * lp.abs().max(1.0));
        for i in 0..cache.num_segments() {
            let m = cache.log_boundary_mass(i);
            assert!((m - lp).abs() <= 1e-8 * lp.abs().max(1.0), "case {case} boundary {i}");
        }
    }
}

#[test]
fn two_state_point_evidence_matches_oracle() {
    let (q, p0, ev) = two_state_example();
    let stats = infer(&q, &p0, &ev, DEFAULT_TOLERANCE).unwrap();
    let oracle = discrete_oracle(&q, &p0, &ev, 1e-4);
    assert!(rel_err(stats.dwell.as_slice(), &oracle.dwell) < 1e-3);
    assert!(rel_err(&flat(&stats.transitions), &flat_rows(&oracle.transitions)) < 2e-3);
    // p(X_1 = 1) under the prior.
    let cache = forward_backward(&q, &p0, &ev).unwrap();
    let expected = (1.0 - (-3.0f64).exp()) / 3.0;
    assert!((cache.log_likelihood() - expected.ln()).abs() < 1e-10);
}

#[test]
fn symmetric_chain_smoothed_midpoint_matches_oracle() {
    let q = IntensityMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], IntensityKind::Proper)
        .unwrap();
    let p0 = StateDistribution::uniform(2);
    let tau = 2.0;
    let ev = Evidence::new(vec![
        EvidenceSegment {
            subsystem: Subsystem::all(2),
            start: 0.0,
            end: tau,
        },
        EvidenceSegment {
            subsystem: Subsystem::singleton(2, 0),
            start: tau,
            end: tau,
        },
    ])
    .unwrap();
    let cache = forward_backward(&q, &p0, &ev).unwrap();
    let mid = smoothed_marginal(&cache, &q, &ev, tau / 2.0).unwrap();
    let oracle = discrete_oracle(&q, &p0, &ev, 1e-4);
    let idx = oracle.marginals.len() / 2;
    assert!(rel_err(mid.probs(), &oracle.marginals[idx]) < 1e-3);
    // Closed form: P(X_1 = 0 | X_2 = 0) = (1 + e^{-2}) / 2.
    assert!((mid.probs()[0] - 0.5 * (1.0 + (-2.0f64).exp())).abs() < 1e-10);
}

#[test]
fn discretisation_error_shrinks_with_step() {
    let mut r = rng(13);
    let q = random_intensity(&mut r, 4, 0.5, 3.0);
    let p0 = random_distribution(&mut r, 4);
    let ev = random_evidence(&mut r, 4, 5);
    let stats = infer(&q, &p0, &ev, DEFAULT_TOLERANCE).unwrap();
    let errors: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&h| {
            let o = discrete_oracle(&q, &p0, &ev, h);
            (
                rel_err(stats.dwell.as_slice(), &o.dwell),
                rel_err(&flat(&stats.transitions), &flat_rows(&o.transitions)),
            )
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1, "errors {errors:?}");
    }
}

#[test]
fn doubling_rates_and_halving_time_keeps_counts() {
    let mut r = rng(14);
    for _ in 0..10 {
        let n = r.random_range(2..=5);
        let q = random_intensity(&mut r, n, 0.1, 5.0);
        let p0 = random_distribution(&mut r, n);
        let ev = random_evidence(&mut r, n, 6);
        let fast = IntensityMatrix::new(q.matrix() * 2.0, IntensityKind::Proper).unwrap();
        let half = Evidence::new(
            ev.segments()
                .iter()
                .map(|s| EvidenceSegment {
                    subsystem: s.subsystem.clone(),
                    start: s.start / 2.0,
                    end: s.end / 2.0,
                })
                .collect(),
        )
        .unwrap();
        let a = infer(&q, &p0, &ev, DEFAULT_TOLERANCE).unwrap();
        let b = infer(&fast, &p0, &half, DEFAULT_TOLERANCE).unwrap();
        assert!(rel_err(&flat(&b.transitions), &flat(&a.transitions)) < 1e-6);
        let halved: Vec<f64> = a.dwell.iter().map(|d| d / 2.0).collect();
        assert!(rel_err(b.dwell.as_slice(), &halved) < 1e-6);
    }
}

#[test]
fn fully_observed_statistics_are_exact() {
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let n = r.random_range(2..=6);
        let q = random_intensity(&mut r, n, 0.1, 10.0);
        let p0 = random_distribution(&mut r, n);
        let traj = sample_trajectory(&p0, &q, 3.0, seed);
        let ev = Evidence::fully_observed(&traj, n);
        let stats = infer(&q, &p0, &ev, DEFAULT_TOLERANCE).unwrap();
        let exact = FlatStatistics::from_complete(&traj, n);
        assert!(rel_err(stats.dwell.as_slice(), exact.dwell.as_slice()) < 1e-10);
        let diff = (&stats.transitions - &exact.transitions).abs().max();
        assert!(diff < 1e-10);
    }
}

#[test]
fn convolution_matches_trapezoid_quadrature() {
    let mut r = rng(15);
    let q = random_intensity(&mut r, 4, 0.2, 4.0);
    // Restrict to three states so rows lose mass to the fourth.
    let sub = DMatrix::from_fn(3, 3, |i, j| q.rate(i, j));
    let qs = IntensityMatrix::new(sub.clone(), IntensityKind::Restricted).unwrap();
    let alpha = DVector::from_vec(vec![0.2, 0.5, 0.3]);
    let beta = DVector::from_vec(vec![0.7, 0.1, 0.4]);
    let dt = 1.0;
    let j = convolution_integrals(&alpha, &qs, &beta, dt, DEFAULT_TOLERANCE).unwrap();

    let points = 1_000_000usize;
    let h = dt / points as f64;
    let step = matrix_exponential(&sub, h);
    let mut fs = Vec::with_capacity(points + 1);
    let mut f = alpha.clone();
    for _ in 0..=points {
        fs.push(f.clone());
        f = step.tr_mul(&f);
    }
    let mut oracle = DMatrix::<f64>::zeros(3, 3);
    let mut b = beta.clone();
    for k in (0..=points).rev() {
        let w = if k == 0 || k == points { 0.5 * h } else { h };
        oracle += &fs[k] * b.transpose() * w;
        b = &step * b;
    }
    let err = (&j - &oracle).abs().max() / oracle.abs().max();
    assert!(err < 1e-8, "relative error {err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn statistics_respect_structure(seed in 0u64..1_000_000, n in 2usize..=6) {
        let mut r = rng(seed);
        let mut q = random_intensity(&mut r, n, 0.1, 10.0).into_matrix();
        // Knock out a few rates to exercise the zero-rate rule.
        for _ in 0..n {
            let (i, k) = (r.random_range(0..n), r.random_range(0..n));
            if i != k {
                q[(i, i)] += q[(i, k)];
                q[(i, k)] = 0.0;
            }
        }
        let q = IntensityMatrix::new(q, IntensityKind::Proper).unwrap();
        let p0 = random_distribution(&mut r, n);
        let ev = random_evidence(&mut r, n, 8);
        match infer(&q, &p0, &ev, DEFAULT_TOLERANCE) {
            Ok(stats) => {
                let total: f64 = stats.dwell.iter().sum();
                prop_assert!((total - ev.horizon()).abs() < 1e-6);
                prop_assert!(stats.dwell.iter().all(|&d| d >= 0.0));
                for i in 0..n {
                    prop_assert_eq!(stats.transitions[(i, i)], 0.0);
                    for k in 0..n {
                        prop_assert!(stats.transitions[(i, k)] >= 0.0);
                        if q.rate(i, k) == 0.0 && i != k {
                            prop_assert_eq!(stats.transitions[(i, k)], 0.0);
                        }
                    }
                }
            }
            Err(ctbn::Error::ZeroProbabilityEvidence { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
