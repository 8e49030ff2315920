//! Convex mixture of evidence matrices with EM-fitted weights.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::io::{create, fields, finish, read_lines};
use crate::corpus::{Bitext, BITEXT_DOC_ID};
use crate::evidence::{labeled_instances, EvidenceMatrix, Vocabulary};
use crate::{Error, Result};

/// Tag of the matrix produced by [`combine`].
pub const COMBINED_TAG: &str = "combined";

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// One weight per generator tag, on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights {
    weights: BTreeMap<String, f64>,
    log_likelihood: Option<f64>,
}

impl MixtureWeights {
    pub fn new(weights: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (tag, w) in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Invariant(format!("mixture weight for {tag} is {w}")));
            }
            if map.insert(tag.clone(), w).is_some() {
                return Err(Error::Invariant(format!("duplicate mixture tag {tag}")));
            }
        }
        let sum: f64 = map.values().sum();
        if map.is_empty() || (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Invariant(format!("mixture weights sum to {sum}, not 1")));
        }
        Ok(MixtureWeights { weights: map, log_likelihood: None })
    }

    pub fn uniform<S: Into<String>>(tags: impl IntoIterator<Item = S>) -> Result<Self> {
        let tags: Vec<String> = tags.into_iter().map(Into::into).collect();
        let w = 1.0 / tags.len() as f64;
        MixtureWeights::new(tags.into_iter().map(|t| (t, w)))
    }

    pub fn get(&self, tag: &str) -> Option<f64> {
        self.weights.get(tag).copied()
    }

    /// (tag, weight) in tag order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, &w)| (t.as_str(), w))
    }

    /// Mean held-out log-likelihood, when the weights came from [`fit_mixture`].
    pub fn log_likelihood(&self) -> Option<f64> {
        self.log_likelihood
    }

    /// TSV `tag\tweight` with a `#loglik=<value>` trailer.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        for (tag, wt) in self.iter() {
            writeln!(w, "{tag}\t{wt}").map_err(io)?;
        }
        let ll = self.log_likelihood.unwrap_or(f64::NAN);
        writeln!(w, "#loglik={ll}").map_err(io)?;
        finish(path, w)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries = Vec::new();
        let mut log_likelihood = None;
        for (lineno, line) in read_lines(path)? {
            if let Some(v) = line.strip_prefix("#loglik=") {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(path, lineno, "invalid log-likelihood"))?;
                log_likelihood = (!v.is_nan()).then_some(v);
                continue;
            }
            let parts = fields(path, lineno, &line, 2)?;
            let w: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("invalid weight {:?}", parts[1])))?;
            entries.push((parts[0].trim().to_string(), w));
        }
        let mut weights = MixtureWeights::new(entries).map_err(|e| Error::format(path, 0, e.to_string()))?;
        weights.log_likelihood = log_likelihood;
        Ok(weights)
    }
}

/// `Σ_k λ_k·p_k` at every cell stored in any input, absent cells read as ε.
///
/// Matrices are summed in tag order, so the result does not depend on the
/// order of `matrices`.
pub fn combine(matrices: &[EvidenceMatrix], weights: &MixtureWeights) -> Result<EvidenceMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::TagMismatch("no evidence matrices to combine".into()))?;
    let epsilon = first.epsilon();
    let mut ordered: Vec<(&EvidenceMatrix, f64)> = Vec::with_capacity(matrices.len());
    let mut seen = BTreeSet::new();
    for m in matrices {
        if !seen.insert(m.generator()) {
            return Err(Error::TagMismatch(format!("generator {} given twice", m.generator())));
        }
        if m.epsilon() != epsilon {
            return Err(Error::Invariant("evidence matrices use different probability floors".into()));
        }
        let w = weights
            .get(m.generator())
            .ok_or_else(|| Error::TagMismatch(format!("no weight for generator {}", m.generator())))?;
        ordered.push((m, w));
    }
    if let Some((extra, _)) = weights.iter().find(|(t, _)| !seen.contains(t)) {
        return Err(Error::TagMismatch(format!("weight given for absent generator {extra}")));
    }
    ordered.sort_by(|a, b| a.0.generator().cmp(b.0.generator()));

    let cells: BTreeSet<(&str, usize, &crate::corpus::Token)> = ordered
        .iter()
        .flat_map(|(m, _)| m.cells().map(|(d, i, w, _)| (d, i, w)))
        .collect();
    let mut out = EvidenceMatrix::new(COMBINED_TAG, epsilon);
    for (doc, i, word) in cells {
        let p: f64 = ordered.iter().map(|(m, w)| w * m.get(doc, i, word.as_str())).sum();
        out.set(doc, i, word.clone(), p);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EmFit {
    /// One weight per likelihood column.
    pub weights: Vec<f64>,
    /// Mean log-likelihood at the uniform start and after every M-step.
    pub log_likelihoods: Vec<f64>,
}

fn mean_log_likelihood(rows: &[Vec<f64>], weights: &[f64]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|q| q.iter().zip(weights).map(|(q, w)| q * w).sum::<f64>().ln())
        .sum();
    total / rows.len() as f64
}

/// EM for the weights of a mixture with fixed experts. `rows[n][k]` is the
/// likelihood expert `k` assigns to instance `n`.
///
/// Starts uniform and stops when the mean log-likelihood improves by less
/// than `tolerance` or after `max_iterations` M-steps.
pub fn em_mixture_weights(rows: &[Vec<f64>], max_iterations: usize, tolerance: f64) -> Result<EmFit> {
    let k = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || k == 0 {
        return Err(Error::Degenerate("mixture fitting has no labeled instances".into()));
    }
    if rows.iter().any(|r| r.len() != k || r.iter().any(|&q| !(q > 0.0) || !q.is_finite())) {
        return Err(Error::Invariant("expert likelihoods must be positive and finite".into()));
    }
    let mut weights = vec![1.0 / k as f64; k];
    let mut history = vec![mean_log_likelihood(rows, &weights)];
    let mut resp = vec![0.0; k];
    for _ in 0..max_iterations {
        let mut next = vec![0.0; k];
        for q in rows {
            let mut norm = 0.0;
            for j in 0..k {
                resp[j] = weights[j] * q[j];
                norm += resp[j];
            }
            for j in 0..k {
                next[j] += resp[j] / norm;
            }
        }
        let sum: f64 = next.iter().sum();
        for w in &mut next {
            *w /= sum;
        }
        let ll = mean_log_likelihood(rows, &next);
        let prev = *history.last().unwrap();
        debug_assert!(ll >= prev - 1e-12 * prev.abs().max(1.0), "EM log-likelihood decreased");
        weights = next;
        history.push(ll);
        if ll - prev < tolerance {
            break;
        }
    }
    Ok(EmFit { weights, log_likelihoods: history })
}

#[derive(Debug, Clone)]
pub struct MixtureConfig {
    pub negatives_per_positive: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            negatives_per_positive: 50,
            max_iterations: 500,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureFit {
    pub weights: MixtureWeights,
    pub log_likelihoods: Vec<f64>,
}

/// Fits mixture weights on held-out bitext. Each matrix must hold evidence for
/// the bitext's foreign side under document id [`BITEXT_DOC_ID`], sentence
/// `i` being pair `i`. Instances are labeled like the ensemble's: words of the
/// English sentence are positives, sampled vocabulary words negatives.
pub fn fit_mixture(
    matrices: &[EvidenceMatrix],
    heldout: &Bitext,
    vocab: &Vocabulary,
    config: &MixtureConfig,
) -> Result<MixtureFit> {
    if matrices.len() < 2 {
        return Err(Error::Config(format!(
            "mixture fitting needs at least 2 evidence matrices, found {}",
            matrices.len()
        )));
    }
    let mut ordered: Vec<&EvidenceMatrix> = matrices.iter().collect();
    ordered.sort_by(|a, b| a.generator().cmp(b.generator()));
    if ordered.windows(2).any(|w| w[0].generator() == w[1].generator()) {
        return Err(Error::TagMismatch("duplicate generator tags".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let instances = labeled_instances(heldout, vocab, config.negatives_per_positive, &mut rng);
    let rows: Vec<Vec<f64>> = instances
        .iter()
        .map(|inst| {
            let word = vocab.word(inst.word).as_str();
            ordered
                .iter()
                .map(|m| {
                    let p = m.get(BITEXT_DOC_ID, inst.pair, word);
                    if inst.label {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .collect()
        })
        .collect();
    let fit = em_mixture_weights(&rows, config.max_iterations, config.tolerance)?;
    let mut weights = MixtureWeights::new(
        ordered
            .iter()
            .zip(&fit.weights)
            .map(|(m, &w)| (m.generator().to_string(), w)),
    )?;
    weights.log_likelihood = fit.log_likelihoods.last().copied();
    Ok(MixtureFit { weights, log_likelihoods: fit.log_likelihoods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};

    fn tok(s: &str) -> Token {
        Token::new(s).unwrap()
    }

    fn single(tag: &str, p: f64) -> EvidenceMatrix {
        let mut m = EvidenceMatrix::new(tag, 1e-6);
        m.set("d", 0, tok("w"), p);
        m
    }

    fn weights(pairs: &[(&str, f64)]) -> MixtureWeights {
        MixtureWeights::new(pairs.iter().map(|&(t, w)| (t.to_string(), w))).unwrap()
    }

    #[test]
    fn weighted_average() {
        let out = combine(&[single("a", 0.2), single("b", 0.8)], &weights(&[("a", 0.5), ("b", 0.5)])).unwrap();
        assert!((out.get("d", 0, "w") - 0.5).abs() < 1e-15);
        assert_eq!(out.generator(), COMBINED_TAG);

        let out = combine(&[single("a", 0.2), single("b", 0.8)], &weights(&[("a", 1.0), ("b", 0.0)])).unwrap();
        assert_eq!(out.get("d", 0, "w"), 0.2);

        let out = combine(
            &[single("a", 0.9), single("b", 0.1), single("c", 0.5)],
            &weights(&[("a", 0.2), ("b", 0.3), ("c", 0.5)]),
        )
        .unwrap();
        assert!((out.get("d", 0, "w") - 0.46).abs() < 1e-15);
    }

    #[test]
    fn absent_cells_read_as_floor() {
        let mut b = EvidenceMatrix::new("b", 1e-6);
        b.set("d", 1, tok("w"), 0.5);
        let out = combine(&[single("a", 0.5), b], &weights(&[("a", 0.5), ("b", 0.5)])).unwrap();
        assert!((out.get("d", 0, "w") - (0.25 + 0.5e-6)).abs() < 1e-15);
        assert!((out.get("d", 1, "w") - (0.25 + 0.5e-6)).abs() < 1e-15);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn tag_mismatch_is_an_error() {
        let ms = [single("a", 0.2), single("b", 0.8)];
        assert!(matches!(combine(&ms, &weights(&[("a", 1.0)])), Err(Error::TagMismatch(_))));
        assert!(matches!(
            combine(&ms[..1], &weights(&[("a", 0.5), ("b", 0.5)])),
            Err(Error::TagMismatch(_))
        ));
    }

    #[test]
    fn order_of_inputs_does_not_matter() {
        let mut a = EvidenceMatrix::new("a", 1e-6);
        let mut b = EvidenceMatrix::new("b", 1e-6);
        let mut c = EvidenceMatrix::new("c", 1e-6);
        for i in 0..20 {
            a.set("d", i, tok("w"), 0.013 * i as f64 + 0.01);
            b.set("d", i, tok("w"), 0.97 - 0.031 * i as f64);
            c.set("d", i + 3, tok("v"), 0.1 * (i % 7) as f64 + 0.05);
        }
        let w = weights(&[("a", 0.1), ("b", 0.7), ("c", 0.2)]);
        let x = combine(&[a.clone(), b.clone(), c.clone()], &w).unwrap();
        let y = combine(&[c, a, b], &w).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn weights_must_be_on_simplex() {
        assert!(MixtureWeights::new([("a".to_string(), 0.5), ("b".to_string(), 0.6)]).is_err());
        assert!(MixtureWeights::new([("a".to_string(), -0.1), ("b".to_string(), 1.1)]).is_err());
        assert!(MixtureWeights::uniform(["a", "b", "c"]).is_ok());
    }

    #[test]
    fn weights_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.tsv");
        let mut w = weights(&[("tt:x", 0.3), ("mt", 0.7)]);
        w.log_likelihood = Some(-0.123);
        w.write(&path).unwrap();
        assert_eq!(MixtureWeights::load(&path).unwrap(), w);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with("#loglik=-0.123\n"));
    }

    #[test]
    fn identical_experts_keep_uniform_weights() {
        let s = |x: &str| Sentence::parse(x).unwrap();
        let bitext = Bitext::new(vec![(s("f1 f2"), s("a b")), (s("f3"), s("c"))]).unwrap();
        let vocab = Vocabulary::from_words(["a", "b", "c", "d"].map(tok)).unwrap();
        let mut m = EvidenceMatrix::new("x", 1e-6);
        m.set(BITEXT_DOC_ID, 0, tok("a"), 0.7);
        m.set(BITEXT_DOC_ID, 1, tok("d"), 0.4);
        let n = m.clone().with_generator("y");
        let fit = fit_mixture(&[m, n], &bitext, &vocab, &MixtureConfig::default()).unwrap();
        for (_, w) in fit.weights.iter() {
            assert!((w - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn informative_expert_gets_more_weight() {
        // Expert "good" knows the labels; "flat" says 0.5 everywhere.
        let s = |x: &str| Sentence::parse(x).unwrap();
        let words = ["a", "b", "c", "d", "e", "f"];
        let vocab = Vocabulary::from_words(words.map(tok)).unwrap();
        let mut pairs = Vec::new();
        for i in 0..30 {
            pairs.push((s("f"), s(&format!("{} {}", words[i % 6], words[(i + 2) % 6]))));
        }
        let bitext = Bitext::new(pairs).unwrap();
        let mut good = EvidenceMatrix::new("good", 1e-6);
        let mut flat = EvidenceMatrix::new("flat", 1e-6);
        for (i, (_, e)) in bitext.pairs().iter().enumerate() {
            for w in words {
                let p = if e.contains(w) { 0.9 } else { 0.05 };
                good.set(BITEXT_DOC_ID, i, tok(w), p);
                flat.set(BITEXT_DOC_ID, i, tok(w), 0.5);
            }
        }
        let fit = fit_mixture(&[good, flat], &bitext, &vocab, &MixtureConfig::default()).unwrap();
        assert!(fit.weights.get("good").unwrap() > fit.weights.get("flat").unwrap());
        assert!(fit.log_likelihoods.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn no_instances_is_an_error() {
        assert!(matches!(em_mixture_weights(&[], 10, 1e-8), Err(Error::Degenerate(_))));
    }
}
