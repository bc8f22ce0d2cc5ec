mod common;

use common::*;
use ctbn::markov::{matrix_exponential, sample_trajectory, transient_distribution};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_is_row_stochastic(seed in any::<u64>(), n in 1usize..=6, t in 0.0f64..20.0) {
        let q = random_intensity(&mut rng(seed), n, 0.0, 10.0);
        let e = q.exp(t);
        for i in 0..n {
            let s: f64 = e.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(e.row(i).iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn exponential_semigroup(seed in any::<u64>(), n in 2usize..=6, s in 0.0f64..10.0, t in 0.0f64..10.0) {
        let q = random_intensity(&mut rng(seed), n, 0.0, 10.0);
        let lhs = matrix_exponential(q.matrix(), s) * matrix_exponential(q.matrix(), t);
        let rhs = matrix_exponential(q.matrix(), s + t);
        prop_assert!((lhs - rhs).abs().max() < 1e-8);
    }

    #[test]
    fn transient_distribution_settles_monotonically(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_intensity(&mut r, 4, 0.1, 10.0);
        let p0 = random_distribution(&mut r, 4);
        let mut prev_gap = f64::INFINITY;
        for k in 0..12 {
            let a = transient_distribution(&p0, &q, k as f64).unwrap();
            let b = transient_distribution(&p0, &q, k as f64 + 1.0).unwrap();
            let gap = a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            // Once the gap reaches rounding level it can only jitter.
            prop_assert!(gap <= prev_gap || gap < 1e-12, "k={} gap={:e} prev={:e}", k, gap, prev_gap);
            prev_gap = gap;
        }
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let q = random_intensity(&mut r, n, 0.1, 10.0);
        let p0 = random_distribution(&mut r, n);
        let a = sample_trajectory(&p0, &q, 5.0, seed);
        let b = sample_trajectory(&p0, &q, 5.0, seed);
        prop_assert_eq!(a, b);
    }
}
