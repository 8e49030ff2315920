use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clir::corpus::{Bitext, Sentence, Token, BITEXT_DOC_ID};
use clir::evidence::{
    ensemble_loss_and_gradient, fit_mt_ensemble, mt_evidence, EnsembleConfig, EnsembleTrainingSet, MtHypothesisSet,
    Vocabulary,
};

fn random_set(rng: &mut ChaCha8Rng, features: usize) -> EnsembleTrainingSet {
    EnsembleTrainingSet::new(
        features,
        (0..200).map(|_| ((0..features).map(|_| rng.random_bool(0.4)).collect(), rng.random_bool(0.3))),
    )
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let features = rng.random_range(1..=4);
        let set = random_set(&mut rng, features);
        let w: Vec<f64> = (0..features).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b = rng.random_range(-3.0..3.0);
        let l2 = 1e-3;
        let (_, gw, gb) = ensemble_loss_and_gradient(&set, &w, b, l2);
        let h = 1e-6;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        for i in 0..features {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus[i] += h;
            minus[i] -= h;
            let fd = (ensemble_loss_and_gradient(&set, &plus, b, l2).0 - ensemble_loss_and_gradient(&set, &minus, b, l2).0)
                / (2.0 * h);
            assert!(rel(gw[i], fd) <= 1e-4, "weight {i}: {} vs {fd}", gw[i]);
        }
        let fd = (ensemble_loss_and_gradient(&set, &w, b + h, l2).0 - ensemble_loss_and_gradient(&set, &w, b - h, l2).0)
            / (2.0 * h);
        assert!(rel(gb, fd) <= 1e-4, "bias: {gb} vs {fd}");
    }
}

fn tok(s: &str) -> Token {
    Token::new(s).unwrap()
}

#[test]
fn the_more_accurate_system_gets_the_larger_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let words: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let mut pairs = Vec::new();
    let mut hyps = MtHypothesisSet::new();
    for s in 0..300 {
        let reference: Vec<usize> = (0..5).map(|_| rng.random_range(0..words.len())).collect();
        for (system, wer) in [("good", 0.1), ("poor", 0.5)] {
            let hyp = reference
                .iter()
                .map(|&w| if rng.random_bool(wer) { rng.random_range(0..words.len()) } else { w })
                .map(|w| tok(&words[w]))
                .collect();
            hyps.insert(system, BITEXT_DOC_ID, s, hyp);
        }
        let e = Sentence::new(reference.iter().map(|&w| tok(&words[w])).collect()).unwrap();
        pairs.push((Sentence::parse("f").unwrap(), e));
    }
    let bitext = Bitext::new(pairs).unwrap();
    let vocab = Vocabulary::from_bitext_english(&bitext, usize::MAX);
    let fit = fit_mt_ensemble(&hyps, &bitext, &vocab, &EnsembleConfig::default()).unwrap();
    let w = fit.model.weights();
    assert_eq!(fit.model.systems(), ["good", "poor"]);
    assert!(w[0] > w[1] && w[1] > 0.0, "{w:?}");
    assert!(fit.iterations < EnsembleConfig::default().max_iterations);

    let both = mt_evidence(&fit.model, &hyps, BITEXT_DOC_ID, 0, hyps.get("good", BITEXT_DOC_ID, 0).unwrap()[0].as_str());
    assert!(both.unwrap() > 0.5);
}
