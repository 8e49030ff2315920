//! Logistic-regression ensemble over MT outputs.
//!
//! Each MT system contributes one binary feature per (sentence, word): whether
//! the word occurs in that system's translation of the sentence.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{labeled_instances, Vocabulary};
use crate::corpus::io::{create, fields, finish, read_lines};
use crate::corpus::{normalize, Bitext, Corpus, Token, BITEXT_DOC_ID};
use crate::{sigmoid, softplus, Error, Result};

/// English translations keyed by system, then (document, sentence index).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MtHypothesisSet {
    systems: BTreeMap<String, BTreeMap<(String, usize), Vec<Token>>>,
}

impl MtHypothesisSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a translation; an empty translation is allowed.
    pub fn insert(&mut self, system: &str, doc: &str, sentence: usize, translation: Vec<Token>) {
        self.systems
            .entry(system.to_string())
            .or_default()
            .insert((doc.to_string(), sentence), translation);
    }

    /// System ids in sorted order.
    pub fn systems(&self) -> impl Iterator<Item = &str> {
        self.systems.keys().map(String::as_str)
    }

    pub fn num_systems(&self) -> usize {
        self.systems.len()
    }

    pub fn get(&self, system: &str, doc: &str, sentence: usize) -> Option<&[Token]> {
        self.systems
            .get(system)?
            .get(&(doc.to_string(), sentence))
            .map(Vec::as_slice)
    }

    fn require(&self, system: &str, doc: &str, sentence: usize) -> Result<&[Token]> {
        self.get(system, doc, sentence).ok_or_else(|| Error::MissingHypothesis {
            system: system.to_string(),
            doc: doc.to_string(),
            sentence,
        })
    }

    /// Every referenced (document, sentence) must exist in `corpus`.
    pub fn validate_against(&self, corpus: &Corpus) -> Result<()> {
        for (system, hyps) in &self.systems {
            for (doc, i) in hyps.keys() {
                let ok = corpus.get(doc).is_some_and(|d| *i < d.num_segments());
                if !ok {
                    return Err(Error::Invariant(format!(
                        "system {system} translates unknown sentence {doc}:{i}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// TSV `system\tdoc\tsentence-index\ttranslation`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut set = MtHypothesisSet::new();
        for (lineno, line) in read_lines(path)? {
            let parts = fields(path, lineno, &line, 4)?;
            let (system, doc) = (parts[0].trim(), parts[1].trim());
            if system.is_empty() || doc.is_empty() {
                return Err(Error::format(path, lineno, "empty system or document id"));
            }
            let sentence: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("invalid sentence index {:?}", parts[2])))?;
            if set.get(system, doc, sentence).is_some() {
                return Err(Error::format(
                    path,
                    lineno,
                    format!("duplicate hypothesis for {system} {doc}:{sentence}"),
                ));
            }
            set.insert(system, doc, sentence, normalize(parts[3]));
        }
        Ok(set)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        for (system, hyps) in &self.systems {
            for ((doc, i), tokens) in hyps {
                writeln!(w, "{system}\t{doc}\t{i}\t{}", crate::corpus::join(tokens))
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        finish(path, w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtEnsembleModel {
    systems: Vec<String>,
    weights: Vec<f64>,
    bias: f64,
}

impl MtEnsembleModel {
    pub fn new(systems: Vec<String>, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if systems.len() != weights.len() {
            return Err(Error::Invariant("one weight per MT system required".into()));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Invariant("ensemble parameters must be finite".into()));
        }
        Ok(MtEnsembleModel { systems, weights, bias })
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn probability(&self, features: &[bool]) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(features)
            .filter(|(_, &x)| x)
            .map(|(w, _)| w)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }

    /// `#bias=<b>` header then `system\tweight` lines.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "#bias={}", self.bias).map_err(io)?;
        for (s, wt) in self.systems.iter().zip(&self.weights) {
            writeln!(w, "{s}\t{wt}").map_err(io)?;
        }
        finish(path, w)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut lines = read_lines(path)?.into_iter();
        let bias = match lines.next() {
            Some((n, l)) => l
                .strip_prefix("#bias=")
                .and_then(|b| b.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::format(path, n, "expected `#bias=<value>` header"))?,
            None => return Err(Error::format(path, 1, "empty ensemble model file")),
        };
        let (mut systems, mut weights) = (Vec::new(), Vec::new());
        for (lineno, line) in lines {
            let parts = fields(path, lineno, &line, 2)?;
            let w: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("invalid weight {:?}", parts[1])))?;
            systems.push(parts[0].trim().to_string());
            weights.push(w);
        }
        MtEnsembleModel::new(systems, weights, bias).map_err(|e| Error::format(path, 0, e.to_string()))
    }
}

/// `sigmoid(Σ_k w_k·x_k + b)` where `x_k` says whether system `k`'s translation
/// of the sentence contains `word`.
pub fn mt_evidence(
    model: &MtEnsembleModel,
    hyps: &MtHypothesisSet,
    doc: &str,
    sentence: usize,
    word: &str,
) -> Result<f64> {
    let features = model
        .systems
        .iter()
        .map(|s| Ok(hyps.require(s, doc, sentence)?.iter().any(|t| t.as_str() == word)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(model.probability(&features))
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub l2: f64,
    /// Initial step of every iteration; halved until the loss decreases.
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once the relative loss decrease falls below this.
    pub tolerance: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            l2: 1e-3,
            learning_rate: 0.1,
            max_iterations: 100_000,
            tolerance: 1e-7,
            negatives_per_positive: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Pattern {
    features: Vec<bool>,
    positives: f64,
    negatives: f64,
}

/// Training instances grouped by feature pattern.
#[derive(Debug, Clone)]
pub struct EnsembleTrainingSet {
    num_features: usize,
    patterns: Vec<Pattern>,
    total: f64,
}

impl EnsembleTrainingSet {
    pub fn new(num_features: usize, instances: impl IntoIterator<Item = (Vec<bool>, bool)>) -> Self {
        let mut grouped: BTreeMap<Vec<bool>, (f64, f64)> = BTreeMap::new();
        let mut total = 0.0;
        for (features, label) in instances {
            assert_eq!(features.len(), num_features, "feature width mismatch");
            let entry = grouped.entry(features).or_default();
            if label {
                entry.0 += 1.0;
            } else {
                entry.1 += 1.0;
            }
            total += 1.0;
        }
        let patterns = grouped
            .into_iter()
            .map(|(features, (positives, negatives))| Pattern { features, positives, negatives })
            .collect();
        EnsembleTrainingSet { num_features, patterns, total }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn positives(&self) -> f64 {
        self.patterns.iter().map(|p| p.positives).sum()
    }

    pub fn negatives(&self) -> f64 {
        self.patterns.iter().map(|p| p.negatives).sum()
    }
}

/// Mean negative log-likelihood plus `l2/2·‖w‖²` (bias unregularized), with
/// its gradient `(∂/∂w, ∂/∂b)`.
pub fn ensemble_loss_and_gradient(
    set: &EnsembleTrainingSet,
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for p in &set.patterns {
        let z: f64 = weights
            .iter()
            .zip(&p.features)
            .filter(|(_, &x)| x)
            .map(|(w, _)| w)
            .sum::<f64>()
            + bias;
        loss += p.positives * softplus(-z) + p.negatives * softplus(z);
        let residual = sigmoid(z) * (p.positives + p.negatives) - p.positives;
        grad_b += residual;
        for (g, &x) in grad_w.iter_mut().zip(&p.features) {
            if x {
                *g += residual;
            }
        }
    }
    let n = set.total.max(1.0);
    loss /= n;
    grad_b /= n;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

#[derive(Debug, Clone)]
pub struct EnsembleFit {
    pub model: MtEnsembleModel,
    pub loss: f64,
    pub iterations: usize,
}

/// Fits the ensemble on held-out bitext whose foreign side is translated by
/// every system under document id [`BITEXT_DOC_ID`].
pub fn fit_mt_ensemble(
    hyps: &MtHypothesisSet,
    heldout: &Bitext,
    vocab: &Vocabulary,
    config: &EnsembleConfig,
) -> Result<EnsembleFit> {
    let systems: Vec<String> = hyps.systems().map(str::to_string).collect();
    if systems.len() < 2 {
        return Err(Error::Degenerate(format!(
            "ensemble needs at least 2 MT systems, found {}",
            systems.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let instances = labeled_instances(heldout, vocab, config.negatives_per_positive, &mut rng);

    // Word membership per (system, pair), built once.
    let mut translations: Vec<HashMap<usize, Vec<&Token>>> = vec![HashMap::new(); systems.len()];
    let mut rows = Vec::with_capacity(instances.len());
    for inst in &instances {
        let mut features = Vec::with_capacity(systems.len());
        for (k, system) in systems.iter().enumerate() {
            let hyp = match translations[k].get(&inst.pair) {
                Some(h) => h,
                None => {
                    let h: Vec<&Token> = hyps.require(system, BITEXT_DOC_ID, inst.pair)?.iter().collect();
                    translations[k].entry(inst.pair).or_insert(h)
                }
            };
            let word = vocab.word(inst.word);
            features.push(hyp.contains(&word));
        }
        rows.push((features, inst.label));
    }
    let set = EnsembleTrainingSet::new(systems.len(), rows);
    fit_mt_ensemble_from(&set, systems, None, config)
}

/// Gradient descent with step halving from `init` (zeros when `None`).
pub fn fit_mt_ensemble_from(
    set: &EnsembleTrainingSet,
    systems: Vec<String>,
    init: Option<(Vec<f64>, f64)>,
    config: &EnsembleConfig,
) -> Result<EnsembleFit> {
    if set.positives() == 0.0 || set.negatives() == 0.0 {
        return Err(Error::Degenerate(format!(
            "ensemble training set has {} positives and {} negatives",
            set.positives(),
            set.negatives()
        )));
    }
    let (mut weights, mut bias) = init.unwrap_or_else(|| (vec![0.0; set.num_features], 0.0));
    let (mut loss, mut gw, mut gb) = ensemble_loss_and_gradient(set, &weights, bias, config.l2);
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let grad_sq = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if grad_sq == 0.0 {
            break;
        }
        let mut step = config.learning_rate;
        let accepted = loop {
            let w2: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
            let b2 = bias - step * gb;
            let (l2, gw2, gb2) = ensemble_loss_and_gradient(set, &w2, b2, config.l2);
            if l2 <= loss - 1e-4 * step * grad_sq {
                break Some((w2, b2, l2, gw2, gb2));
            }
            step *= 0.5;
            if step < 1e-16 {
                break None;
            }
        };
        let Some((w2, b2, l2, gw2, gb2)) = accepted else { break };
        let improvement = (loss - l2) / loss.abs().max(f64::MIN_POSITIVE);
        weights = w2;
        bias = b2;
        loss = l2;
        gw = gw2;
        gb = gb2;
        if improvement < config.tolerance {
            break;
        }
    }
    Ok(EnsembleFit {
        model: MtEnsembleModel::new(systems, weights, bias)?,
        loss,
        iterations,
    })
}
