use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clir::combiner::{fit_mixture, MixtureConfig};
use clir::corpus::{Bitext, Sentence, Token, BITEXT_DOC_ID};
use clir::evidence::{EvidenceMatrix, Vocabulary};

fn tok(s: &str) -> Token {
    Token::new(s).unwrap()
}

/// Two fixed experts over `pairs × words` cells; each label is drawn from
/// expert 1 with probability `lambda`, otherwise from expert 2. Every word
/// is labeled, so with enough negatives per positive all cells are used.
fn sample(seed: u64, lambda: f64, pairs: usize, words: usize) -> (Vec<EvidenceMatrix>, Bitext, Vocabulary) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::from_words((0..words).map(|w| tok(&format!("w{w}")))).unwrap();
    let mut experts = [EvidenceMatrix::new("a", 1e-6), EvidenceMatrix::new("b", 1e-6)];
    let mut bitext = Vec::new();
    for s in 0..pairs {
        loop {
            let mut positives = Vec::new();
            let mut cells = Vec::new();
            for w in 0..words {
                let p: [f64; 2] = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
                let q = if rng.random_bool(lambda) { p[0] } else { p[1] };
                if rng.random_bool(q) {
                    positives.push(vocab.word(w).clone());
                }
                cells.push(p);
            }
            if positives.is_empty() {
                continue;
            }
            for (w, p) in cells.iter().enumerate() {
                for (m, &pm) in experts.iter_mut().zip(p) {
                    m.set(BITEXT_DOC_ID, s, vocab.word(w).clone(), pm);
                }
            }
            bitext.push((Sentence::parse("f").unwrap(), Sentence::new(positives).unwrap()));
            break;
        }
    }
    (experts.to_vec(), Bitext::new(bitext).unwrap(), vocab)
}

#[test]
fn recovers_planted_weights() {
    for seed in 0..20 {
        let (experts, bitext, vocab) = sample(seed, 0.7, 500, 20);
        let cfg = MixtureConfig { negatives_per_positive: 1000, seed, ..MixtureConfig::default() };
        let fit = fit_mixture(&experts, &bitext, &vocab, &cfg).unwrap();
        let a = fit.weights.get("a").unwrap();
        assert!((a - 0.7).abs() <= 0.05, "seed {seed}: {a}");
        assert!(fit.log_likelihoods.windows(2).all(|w| w[1] >= w[0] - 1e-12), "seed {seed}");
    }
}
