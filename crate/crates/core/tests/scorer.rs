use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use clir::corpus::{Corpus, Document, Judgments, Sentence};
use clir::scorer::{score_query, score_run};

fn ids(mask: u64, n: usize) -> BTreeSet<String> {
    (0..n).filter(|i| mask & (1 << i) != 0).map(|i| format!("d{i:02}")).collect()
}

/// QV by counting, document by document.
fn oracle(returned: &BTreeSet<String>, gold: &BTreeSet<String>, n: usize, beta: f64) -> f64 {
    let (mut hits, mut false_alarms) = (0usize, 0usize);
    for i in 0..n {
        let d = format!("d{i:02}");
        match (returned.contains(&d), gold.contains(&d)) {
            (true, true) => hits += 1,
            (true, false) => false_alarms += 1,
            _ => {}
        }
    }
    let n_r = gold.len() as f64;
    1.0 - ((n_r - hits as f64) / n_r + beta * false_alarms as f64 / (n as f64 - n_r))
}

fn instance() -> impl Strategy<Value = (usize, u64, u64, f64)> {
    (2usize..=30).prop_flat_map(|n| {
        let full = (1u64 << n) - 1;
        (Just(n), 0..=full, 1..full, 0.5f64..50.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn matches_counting_oracle((n, r, g, beta) in instance()) {
        let (returned, gold) = (ids(r, n), ids(g, n));
        let s = score_query("q", &returned, &gold, n, beta).unwrap().unwrap();
        prop_assert!((s.qv - oracle(&returned, &gold, n, beta)).abs() <= 1e-12);
        prop_assert!(s.n_t <= s.n_r);
        prop_assert_eq!(s.n_t + s.n_f, returned.len());
        prop_assert!(s.qv <= 1.0);
        prop_assert_eq!(s.qv == 1.0, returned == gold);
    }

    #[test]
    fn one_more_document_moves_qv_by_a_fixed_amount((n, r, g, beta) in instance(), pick in any::<prop::sample::Index>()) {
        let (returned, gold) = (ids(r, n), ids(g, n));
        let absent: Vec<String> = ids(u64::MAX, n).difference(&returned).cloned().collect();
        prop_assume!(!absent.is_empty());
        let added = absent[pick.index(absent.len())].clone();
        let mut more = returned.clone();
        more.insert(added.clone());
        let before = score_query("q", &returned, &gold, n, beta).unwrap().unwrap().qv;
        let after = score_query("q", &more, &gold, n, beta).unwrap().unwrap().qv;
        let delta = if gold.contains(&added) {
            1.0 / gold.len() as f64
        } else {
            -beta / (n - gold.len()) as f64
        };
        prop_assert!((after - before - delta).abs() <= 1e-12);
    }
}

fn corpus(n: usize) -> Corpus {
    Corpus::from_documents(
        (0..n).map(|i| Document::text(format!("d{i:02}"), vec![Sentence::parse("x").unwrap()]).unwrap()),
    )
    .unwrap()
}

#[test]
fn run_score_is_the_plain_mean_and_order_free() {
    let n = 20;
    let c = corpus(n);
    let mut judgments = Judgments::new();
    let mut returned = BTreeMap::new();
    let mut expected = Vec::new();
    for q in 0..7u64 {
        let gold = ids(0b11 << q, n);
        let got = ids((0b101 << (q + 1)) | 1, n);
        for d in &gold {
            judgments.insert(format!("q{q}"), d.clone());
        }
        expected.push(oracle(&got, &gold, n, 40.0));
        returned.insert(format!("q{q}"), got);
    }
    let run = score_run(&returned, &judgments, &c, 40.0).unwrap();
    let mean = expected.iter().sum::<f64>() / expected.len() as f64;
    assert!((run.maqwv - mean).abs() <= 1e-12);
    assert_eq!(run.n_q, 7);

    // same queries inserted in the reverse order
    let reversed: BTreeMap<_, _> = returned.into_iter().rev().collect();
    assert_eq!(score_run(&reversed, &judgments, &c, 40.0).unwrap().maqwv, run.maqwv);
}
