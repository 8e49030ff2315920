//! Labeled (sentence, word) instances drawn from bitext.
//!
//! Every vocabulary word in the English side of a pair is a positive for the
//! foreign side; negatives are drawn from the rest of the vocabulary.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use super::Vocabulary;
use crate::corpus::Bitext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledInstance {
    /// Index of the bitext pair.
    pub pair: usize,
    /// Vocabulary index of the English word.
    pub word: usize,
    pub label: bool,
}

/// Draws `count` distinct vocabulary indices outside `exclude`, or all of them
/// when fewer than `count` are available. The result is sorted.
pub fn sample_negatives<R: Rng + ?Sized>(
    vocab_size: usize,
    exclude: &HashSet<usize>,
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let available = vocab_size - exclude.len();
    if count == 0 || available == 0 {
        return Vec::new();
    }
    let mut out: Vec<usize> = if count * 2 >= available {
        let complement: Vec<usize> = (0..vocab_size).filter(|i| !exclude.contains(i)).collect();
        if count >= available {
            complement
        } else {
            index::sample(rng, available, count)
                .into_iter()
                .map(|i| complement[i])
                .collect()
        }
    } else {
        let mut chosen = HashSet::with_capacity(count);
        while chosen.len() < count {
            let i = rng.random_range(0..vocab_size);
            if !exclude.contains(&i) {
                chosen.insert(i);
            }
        }
        chosen.into_iter().collect()
    };
    out.sort_unstable();
    out
}

/// Positives are the distinct in-vocabulary words of each English sentence;
/// each pair also gets `negatives_per_positive` negatives per positive,
/// sampled without replacement from the vocabulary minus that sentence.
pub fn labeled_instances<R: Rng + ?Sized>(
    bitext: &Bitext,
    vocab: &Vocabulary,
    negatives_per_positive: usize,
    rng: &mut R,
) -> Vec<LabeledInstance> {
    let mut out = Vec::new();
    for (pair, (_, english)) in bitext.pairs().iter().enumerate() {
        let mut positives = Vec::new();
        let mut seen = HashSet::new();
        let mut in_sentence = HashSet::new();
        for t in english.tokens() {
            if let Some(i) = vocab.get(t.as_str()) {
                in_sentence.insert(i);
                if seen.insert(i) {
                    positives.push(i);
                }
            }
        }
        let negatives = sample_negatives(
            vocab.len(),
            &in_sentence,
            negatives_per_positive * positives.len(),
            rng,
        );
        out.extend(positives.into_iter().map(|word| LabeledInstance { pair, word, label: true }));
        out.extend(negatives.into_iter().map(|word| LabeledInstance { pair, word, label: false }));
    }
    out
}
