use falcon::verify::{check_iop, implicit_quantities, marginal_error, product_measure, Kernel};
use falcon::{ActionDistribution, TablePredictor};
use proptest::prelude::*;

fn predictions() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=8).prop_flat_map(|k| prop::collection::vec(0.0f64..=1.0, k))
}

proptest! {
    #[test]
    fn inverse_gap_distribution_invariants(f in predictions(), gamma in 1.0f64..1e4) {
        let k = f.len() as f64;
        let d = ActionDistribution::inverse_gap(&f, gamma);
        let sum: f64 = d.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        for &p in d.probs() {
            prop_assert!(p >= 1.0 / (k + gamma) - 1e-15);
        }
        prop_assert!(d.prob(d.greedy()) >= 1.0 / k - 1e-12);
        let best = f.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(f[d.greedy()], best);
    }

    /// Per-context form of both constraints: the predicted regret of drawing
    /// from the kernel is sum gap / (K + gamma gap) <= (K - 1) / gamma, and
    /// every action has 1 / p <= K + gamma gap.
    #[test]
    fn per_context_constraints(f in predictions(), gamma in 1.0f64..1e4) {
        let k = f.len() as f64;
        let d = ActionDistribution::inverse_gap(&f, gamma);
        let best = f[d.greedy()];
        let exploit: f64 = f.iter().enumerate().map(|(a, v)| d.prob(a) * (best - v)).sum();
        prop_assert!(exploit <= (k - 1.0) / gamma + 1e-12);
        for (a, v) in f.iter().enumerate() {
            prop_assert!(1.0 / d.prob(a) <= k + gamma * (best - v) + 1e-9);
        }
    }

    #[test]
    fn stratified_sampling_matches_probabilities(f in predictions(), gamma in 1.0f64..100.0) {
        let d = ActionDistribution::inverse_gap(&f, gamma);
        let n = 4096;
        let mut counts = vec![0usize; f.len()];
        for i in 0..n {
            counts[d.sample((i as f64 + 0.5) / n as f64)] += 1;
        }
        for (a, &c) in counts.iter().enumerate() {
            prop_assert!((c as f64 / n as f64 - d.prob(a)).abs() <= 1.0 / n as f64 + 1e-12);
        }
    }

    #[test]
    fn kernel_measure_satisfies_constraints(
        nx in 1usize..=3,
        k in 2usize..=4,
        seed in prop::collection::vec(0.0f64..=1.0, 24),
        ctx in prop::collection::vec(0.05f64..=1.0, 3),
        gamma in 1.0f64..500.0,
    ) {
        let rows = |offset: usize| -> Vec<Vec<f64>> {
            (0..nx).map(|x| (0..k).map(|a| seed[(offset + x * k + a) % seed.len()]).collect()).collect()
        };
        let f_hat = TablePredictor::from_rows(&rows(0)).unwrap();
        let f_star = TablePredictor::from_rows(&rows(11)).unwrap();
        let total: f64 = ctx[..nx].iter().sum();
        let mut probs: Vec<f64> = ctx[..nx].iter().map(|w| w / total).collect();
        let head: f64 = probs[..nx - 1].iter().sum();
        probs[nx - 1] = 1.0 - head;

        let kernel = Kernel::inverse_gap(&f_hat, gamma);
        let q = product_measure(&kernel).unwrap();
        prop_assert!(marginal_error(&q, &kernel) <= 1e-12);
        let quantities = implicit_quantities(&q, &f_hat, &f_star, &probs).unwrap();
        let report = check_iop(&q, gamma, &kernel, &quantities, &probs);
        prop_assert!(report.passed(), "{:?}", report);
    }
}
