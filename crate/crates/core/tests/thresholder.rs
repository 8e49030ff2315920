use proptest::prelude::*;

use clir::relevance::RankedList;
use clir::thresholder::{decide, ThresholdConfig};

const EPS: f64 = 1e-6;

fn list(mut probs: Vec<f64>) -> RankedList {
    probs.sort_by(|a, b| b.total_cmp(a));
    RankedList::new("q", probs.into_iter().enumerate().map(|(i, p)| (format!("d{i:02}"), p)).collect()).unwrap()
}

/// Expected QV of returning `subset`, with relevance independent
/// Bernoulli(p_i) and E_rel = Σ p_i.
fn expected_qv(probs: &[f64], subset: u32, beta: f64) -> f64 {
    let n = probs.len() as f64;
    let e_rel: f64 = probs.iter().sum();
    let (mut miss, mut fa) = (0.0, 0.0);
    for (i, p) in probs.iter().enumerate() {
        if subset & (1 << i) != 0 {
            fa += 1.0 - p;
        } else {
            miss += p;
        }
    }
    1.0 - (miss / e_rel + beta * fa / (n - e_rel))
}

fn best_subset(probs: &[f64], beta: f64) -> f64 {
    (0u32..(1 << probs.len()))
        .map(|s| expected_qv(probs, s, beta))
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn top_k_is_optimal_over_all_subsets(
        probs in prop::collection::vec(EPS..=(1.0 - EPS), 1..=12),
        beta in prop::sample::select(vec![1.0, 2.0, 40.0]),
    ) {
        let l = list(probs);
        let sorted = l.probabilities();
        let d = decide(&l, &ThresholdConfig { beta, gamma: 1.0, epsilon: EPS }).unwrap();
        let chosen: u32 = (0..d.k).map(|i| 1u32 << i).sum();
        let best = best_subset(&sorted, beta);
        prop_assert!((expected_qv(&sorted, chosen, beta) - best).abs() <= 1e-9);
        prop_assert!((d.expected_qv - best).abs() <= 1e-9);
    }

    #[test]
    fn expectations_are_conserved(probs in prop::collection::vec(EPS..=(1.0 - EPS), 1..=40), gamma in 1.0f64..1.5) {
        let l = list(probs);
        let p = l.probabilities();
        let d = decide(&l, &ThresholdConfig { beta: 40.0, gamma, epsilon: EPS }).unwrap();
        let n = p.len();
        prop_assert_eq!(d.e_miss.len(), n + 1);
        prop_assert_eq!(d.e_fa.len(), n + 1);
        let mut head = 0.0;
        for k in 0..=n {
            prop_assert!((d.e_miss[k] + head - d.e_rel).abs() <= 1e-9);
            if k < n {
                head += p[k];
            }
        }
        prop_assert!((d.e_fa[n] - (n as f64 - d.e_rel)).abs() <= 1e-9);
        prop_assert!(d.e_miss.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.e_fa.windows(2).all(|w| w[0] <= w[1]));
        let best = d.curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(d.expected_qv >= best - 1e-12);
    }

    #[test]
    fn costlier_false_alarms_never_return_more(
        probs in prop::collection::vec(0.001f64..0.999, 1..=30),
        beta in 0.5f64..50.0,
        extra in 0.1f64..50.0,
    ) {
        let l = list(probs);
        let lo = decide(&l, &ThresholdConfig { beta, gamma: 1.3, epsilon: EPS }).unwrap();
        let hi = decide(&l, &ThresholdConfig { beta: beta + extra, gamma: 1.3, epsilon: EPS }).unwrap();
        prop_assert!(hi.k <= lo.k);
    }
}
