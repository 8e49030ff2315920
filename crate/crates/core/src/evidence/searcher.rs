//! Shared-embedding relevance scorer.
//!
//! Foreign tokens are embedded (optionally contextualized by one residual
//! self-attention layer) and an English word `w` scores a sentence as
//! `sigmoid(max_j ⟨e(w), h_j⟩ + b_w)`. Training minimizes binary cross-entropy
//! with the words of the aligned English sentence as positives and the rest of
//! the vocabulary as negatives.
//!
//! # File format
//!
//! Plain UTF-8 text, one record per line:
//!
//! ```text
//! clir-searcher 1
//! dim=<d>
//! depth=<0|1>
//! foreign_vocab=<count> <sha256 of newline-joined tokens>
//! english_vocab=<count> <sha256 of newline-joined tokens>
//! [foreign]
//! <unk>\t<d values>            row 0: unknown foreign tokens
//! <token>\t<d values>          one row per foreign token
//! [english]
//! <token>\t<bias>\t<d values>  one row per vocabulary word
//! [attention.query]            depth 1 only: d rows of d values each,
//! [attention.key]              row-major, y = W·x
//! [attention.value]
//! ```
//!
//! Values are space separated and printed in shortest round-trip form, so a
//! written model reloads bit-identically. Loading recomputes both vocabulary
//! hashes and rejects a mismatch.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sample_negatives, Vocabulary};
use crate::corpus::io::{create, finish, read_lines};
use crate::corpus::{Bitext, Sentence, Token};
use crate::{sigmoid, softplus, Error, Result};

const FORMAT_MAGIC: &str = "clir-searcher 1";
const UNK: &str = "<unk>";
const ADAGRAD_INITIAL_ACCUMULATOR: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SearcherConfig {
    pub dim: usize,
    /// 0: raw embeddings; 1: one residual self-attention layer.
    pub depth: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Sentence pairs per gradient step.
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    /// Vocabularies up to this size use every non-positive word as a negative.
    pub full_vocab_threshold: usize,
    pub max_foreign_vocab: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for SearcherConfig {
    fn default() -> Self {
        SearcherConfig {
            dim: 32,
            depth: 0,
            epochs: 10,
            learning_rate: 0.5,
            batch_size: 16,
            negatives_per_positive: 50,
            full_vocab_threshold: 2_000,
            max_foreign_vocab: 100_000,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

/// One training sentence: foreign token indices and labeled English targets.
#[derive(Debug, Clone)]
pub struct SearcherExample {
    pub foreign: Vec<usize>,
    pub targets: Vec<(usize, bool)>,
}

/// Offsets into the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Layout {
    dim: usize,
    foreign_rows: usize,
    english_rows: usize,
    attention: bool,
}

impl Layout {
    fn foreign(&self, i: usize) -> usize {
        i * self.dim
    }
    fn english(&self, k: usize) -> usize {
        (self.foreign_rows + k) * self.dim
    }
    fn bias(&self, k: usize) -> usize {
        (self.foreign_rows + self.english_rows) * self.dim + k
    }
    /// Start of W_q, W_k, W_v.
    fn attention(&self, which: usize) -> usize {
        self.bias(self.english_rows) + which * self.dim * self.dim
    }
    fn len(&self) -> usize {
        self.bias(self.english_rows) + if self.attention { 3 * self.dim * self.dim } else { 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearcherModel {
    layout: Layout,
    /// Index 0 is reserved for unknown tokens.
    foreign: Vec<Token>,
    foreign_index: HashMap<Token, usize>,
    english: Vocabulary,
    params: Vec<f64>,
}

/// Contextualized embeddings of one sentence.
pub struct Context {
    h: Vec<f64>,
    len: usize,
}

struct Forward {
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    alpha: Vec<f64>,
    h: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y = W·x` for a row-major `d × d` matrix.
fn matvec(w: &[f64], x: &[f64], y: &mut [f64]) {
    let d = x.len();
    for (a, out) in y.iter_mut().enumerate() {
        *out = dot(&w[a * d..(a + 1) * d], x);
    }
}

impl SearcherModel {
    /// Uniform random initialization in `[-init_scale, init_scale]`; biases
    /// start at zero.
    pub fn new_random<R: Rng + ?Sized>(
        foreign_words: Vec<Token>,
        english: Vocabulary,
        dim: usize,
        depth: usize,
        init_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut model = SearcherModel::zeros(foreign_words, english, dim, depth)?;
        let bias_start = model.layout.bias(0);
        let bias_end = model.layout.bias(model.layout.english_rows);
        let attn_scale = init_scale / (dim as f64).sqrt();
        for (i, p) in model.params.iter_mut().enumerate() {
            if i < bias_start {
                *p = rng.random_range(-init_scale..=init_scale);
            } else if i >= bias_end {
                *p = rng.random_range(-attn_scale..=attn_scale);
            }
        }
        Ok(model)
    }

    /// All parameters zero.
    pub fn zeros(foreign_words: Vec<Token>, english: Vocabulary, dim: usize, depth: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        if depth > 1 {
            return Err(Error::Config(format!("attention depth {depth} unsupported (0 or 1)")));
        }
        let mut foreign = vec![Token::new(UNK).expect("valid token")];
        let mut foreign_index = HashMap::new();
        for t in foreign_words {
            if t.as_str() == UNK || foreign_index.contains_key(&t) {
                return Err(Error::Invariant(format!("duplicate foreign vocabulary token {t}")));
            }
            foreign_index.insert(t.clone(), foreign.len());
            foreign.push(t);
        }
        let layout = Layout {
            dim,
            foreign_rows: foreign.len(),
            english_rows: english.len(),
            attention: depth == 1,
        };
        Ok(SearcherModel {
            layout,
            foreign,
            foreign_index,
            english,
            params: vec![0.0; layout.len()],
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn depth(&self) -> usize {
        usize::from(self.layout.attention)
    }

    pub fn english_vocab(&self) -> &Vocabulary {
        &self.english
    }

    /// Foreign tokens, excluding the reserved unknown row.
    pub fn foreign_words(&self) -> &[Token] {
        &self.foreign[1..]
    }

    /// Row of a foreign token; unknown tokens map to row 0.
    pub fn foreign_index(&self, token: &str) -> usize {
        self.foreign_index.get(token).copied().unwrap_or(0)
    }

    /// Flat parameters: foreign rows, English rows, English biases, then
    /// W_q, W_k, W_v when attention is on.
    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn foreign_embedding_mut(&mut self, row: usize) -> &mut [f64] {
        let o = self.layout.foreign(row);
        &mut self.params[o..o + self.layout.dim]
    }

    pub fn english_embedding_mut(&mut self, k: usize) -> &mut [f64] {
        let o = self.layout.english(k);
        &mut self.params[o..o + self.layout.dim]
    }

    pub fn set_bias(&mut self, k: usize, bias: f64) {
        let o = self.layout.bias(k);
        self.params[o] = bias;
    }

    pub fn indices(&self, sentence: &Sentence) -> Vec<usize> {
        sentence.tokens().iter().map(|t| self.foreign_index(t.as_str())).collect()
    }

    fn forward(&self, idxs: &[usize]) -> Forward {
        let d = self.layout.dim;
        let n = idxs.len();
        let mut x = vec![0.0; n * d];
        for (j, &i) in idxs.iter().enumerate() {
            let o = self.layout.foreign(i);
            x[j * d..(j + 1) * d].copy_from_slice(&self.params[o..o + d]);
        }
        if !self.layout.attention {
            let h = x.clone();
            return Forward { x, q: vec![], k: vec![], v: vec![], alpha: vec![], h };
        }
        let w = |which: usize| {
            let o = self.layout.attention(which);
            &self.params[o..o + d * d]
        };
        let (mut q, mut k, mut v) = (vec![0.0; n * d], vec![0.0; n * d], vec![0.0; n * d]);
        for j in 0..n {
            let xj = &x[j * d..(j + 1) * d];
            matvec(w(0), xj, &mut q[j * d..(j + 1) * d]);
            matvec(w(1), xj, &mut k[j * d..(j + 1) * d]);
            matvec(w(2), xj, &mut v[j * d..(j + 1) * d]);
        }
        let scale = 1.0 / (d as f64).sqrt();
        let mut alpha = vec![0.0; n * n];
        let mut h = x.clone();
        for j in 0..n {
            let row = &mut alpha[j * n..(j + 1) * n];
            for l in 0..n {
                row[l] = scale * dot(&q[j * d..(j + 1) * d], &k[l * d..(l + 1) * d]);
            }
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for a in row.iter_mut() {
                *a = (*a - max).exp();
                sum += *a;
            }
            for a in row.iter_mut() {
                *a /= sum;
            }
            for l in 0..n {
                let a = row[l];
                for c in 0..d {
                    h[j * d + c] += a * v[l * d + c];
                }
            }
        }
        Forward { x, q, k, v, alpha, h }
    }

    /// Contextualized embeddings `h_1..h_n` of `sentence`.
    pub fn contextualize(&self, sentence: &Sentence) -> Context {
        let idxs = self.indices(sentence);
        Context { h: self.forward(&idxs).h, len: idxs.len() }
    }

    fn best(&self, h: &[f64], n: usize, k: usize) -> (usize, f64) {
        let d = self.layout.dim;
        let e = &self.params[self.layout.english(k)..self.layout.english(k) + d];
        let mut best = (0, f64::NEG_INFINITY);
        for j in 0..n {
            let s = dot(e, &h[j * d..(j + 1) * d]);
            if s > best.1 {
                best = (j, s);
            }
        }
        best
    }

    /// Score of vocabulary word `k` against a contextualized sentence.
    pub fn score_context(&self, context: &Context, k: usize) -> f64 {
        let (_, s) = self.best(&context.h, context.len, k);
        sigmoid(s + self.params[self.layout.bias(k)])
    }

    /// `sigmoid(max_j ⟨e(word), h_j⟩ + b_word)`.
    pub fn score(&self, sentence: &Sentence, word: &str) -> Result<f64> {
        let k = self
            .english
            .get(word)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
        Ok(self.score_context(&self.contextualize(sentence), k))
    }

    /// Adds the gradient of one example's summed loss to `grad`; returns the
    /// loss.
    fn accumulate(&self, ex: &SearcherExample, grad: &mut [f64]) -> f64 {
        let d = self.layout.dim;
        let n = ex.foreign.len();
        if n == 0 {
            return 0.0;
        }
        let fw = self.forward(&ex.foreign);
        let mut dh = vec![0.0; n * d];
        let mut loss = 0.0;
        for &(k, positive) in &ex.targets {
            let (j, s) = self.best(&fw.h, n, k);
            let z = s + self.params[self.layout.bias(k)];
            loss += if positive { softplus(-z) } else { softplus(z) };
            let g = sigmoid(z) - if positive { 1.0 } else { 0.0 };
            let eo = self.layout.english(k);
            for c in 0..d {
                grad[eo + c] += g * fw.h[j * d + c];
                dh[j * d + c] += g * self.params[eo + c];
            }
            grad[self.layout.bias(k)] += g;
        }

        let mut dx = dh.clone();
        if self.layout.attention {
            let scale = 1.0 / (d as f64).sqrt();
            let (mut dq, mut dk, mut dv) = (vec![0.0; n * d], vec![0.0; n * d], vec![0.0; n * d]);
            for j in 0..n {
                let a = &fw.alpha[j * n..(j + 1) * n];
                let dhj = &dh[j * d..(j + 1) * d];
                let mut da = vec![0.0; n];
                for l in 0..n {
                    da[l] = dot(dhj, &fw.v[l * d..(l + 1) * d]);
                    for c in 0..d {
                        dv[l * d + c] += a[l] * dhj[c];
                    }
                }
                let mean: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
                for l in 0..n {
                    let ds = a[l] * (da[l] - mean) * scale;
                    for c in 0..d {
                        dq[j * d + c] += ds * fw.k[l * d + c];
                        dk[l * d + c] += ds * fw.q[j * d + c];
                    }
                }
            }
            for (which, dy) in [(0, &dq), (1, &dk), (2, &dv)] {
                let wo = self.layout.attention(which);
                for j in 0..n {
                    let xj = &fw.x[j * d..(j + 1) * d];
                    let dyj = &dy[j * d..(j + 1) * d];
                    for r in 0..d {
                        if dyj[r] == 0.0 {
                            continue;
                        }
                        for c in 0..d {
                            grad[wo + r * d + c] += dyj[r] * xj[c];
                            dx[j * d + c] += self.params[wo + r * d + c] * dyj[r];
                        }
                    }
                }
            }
        }
        for (j, &i) in ex.foreign.iter().enumerate() {
            let fo = self.layout.foreign(i);
            for c in 0..d {
                grad[fo + c] += dx[j * d + c];
            }
        }
        loss
    }

    /// Summed cross-entropy over every target of every example, and its
    /// gradient with respect to [`SearcherModel::parameters`].
    pub fn loss_and_gradient(&self, examples: &[SearcherExample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let loss = examples.iter().map(|ex| self.accumulate(ex, &mut grad)).sum();
        (loss, grad)
    }

    /// Summed cross-entropy only.
    pub fn loss(&self, examples: &[SearcherExample]) -> f64 {
        let mut loss = 0.0;
        for ex in examples {
            if ex.foreign.is_empty() {
                continue;
            }
            let fw = self.forward(&ex.foreign);
            for &(k, positive) in &ex.targets {
                let (_, s) = self.best(&fw.h, ex.foreign.len(), k);
                let z = s + self.params[self.layout.bias(k)];
                loss += if positive { softplus(-z) } else { softplus(z) };
            }
        }
        loss
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        let d = self.layout.dim;
        let row = |slice: &[f64]| slice.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(w, "{FORMAT_MAGIC}").map_err(io)?;
        writeln!(w, "dim={d}").map_err(io)?;
        writeln!(w, "depth={}", self.depth()).map_err(io)?;
        writeln!(w, "foreign_vocab={} {}", self.foreign.len() - 1, foreign_fingerprint(self.foreign_words()))
            .map_err(io)?;
        writeln!(w, "english_vocab={} {}", self.english.len(), self.english.fingerprint()).map_err(io)?;
        writeln!(w, "[foreign]").map_err(io)?;
        for (i, t) in self.foreign.iter().enumerate() {
            let o = self.layout.foreign(i);
            writeln!(w, "{t}\t{}", row(&self.params[o..o + d])).map_err(io)?;
        }
        writeln!(w, "[english]").map_err(io)?;
        for (k, t) in self.english.words().iter().enumerate() {
            let o = self.layout.english(k);
            let b = self.params[self.layout.bias(k)];
            writeln!(w, "{t}\t{b}\t{}", row(&self.params[o..o + d])).map_err(io)?;
        }
        if self.layout.attention {
            for (which, name) in ["query", "key", "value"].iter().enumerate() {
                writeln!(w, "[attention.{name}]").map_err(io)?;
                let o = self.layout.attention(which);
                for r in 0..d {
                    writeln!(w, "{}", row(&self.params[o + r * d..o + (r + 1) * d])).map_err(io)?;
                }
            }
        }
        finish(path, w)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let lines = read_lines(path)?;
        let mut it = lines.iter().map(|(n, l)| (*n, l.as_str())).peekable();
        let bad = |n: usize, m: String| Error::format(path, n, m);

        let mut next = |what: &str| it.next().ok_or_else(|| bad(0, format!("truncated model: missing {what}")));
        let (n, magic) = next("header")?;
        if magic != FORMAT_MAGIC {
            return Err(bad(n, format!("expected `{FORMAT_MAGIC}`")));
        }
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (n, l) = next(key)?;
            l.strip_prefix(&format!("{key}="))
                .map(|v| (n, v.to_string()))
                .ok_or_else(|| bad(n, format!("expected `{key}=`")))
        };
        let (n, dim) = header("dim")?;
        let dim: usize = dim.parse().map_err(|_| bad(n, "invalid dim".into()))?;
        let (n, depth) = header("depth")?;
        let depth: usize = depth.parse().map_err(|_| bad(n, "invalid depth".into()))?;
        let (fn_, fv) = header("foreign_vocab")?;
        let (en, ev) = header("english_vocab")?;
        let parse_vocab_header = |n: usize, v: &str| -> Result<(usize, String)> {
            let (count, hash) = v.split_once(' ').ok_or_else(|| bad(n, "expected `<count> <hash>`".into()))?;
            Ok((count.parse().map_err(|_| bad(n, "invalid count".into()))?, hash.to_string()))
        };
        let (f_count, f_hash) = parse_vocab_header(fn_, &fv)?;
        let (e_count, e_hash) = parse_vocab_header(en, &ev)?;

        let parse_row = |n: usize, s: &str, want: usize| -> Result<Vec<f64>> {
            let vals = s
                .split(' ')
                .map(|x| x.parse::<f64>().map_err(|_| bad(n, format!("invalid value {x:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != want || vals.iter().any(|v| !v.is_finite()) {
                return Err(bad(n, format!("expected {want} finite values")));
            }
            Ok(vals)
        };
        let section = |it: &mut dyn Iterator<Item = (usize, &str)>, name: &str| -> Result<()> {
            match it.next() {
                Some((_, l)) if l == name => Ok(()),
                Some((n, _)) => Err(bad(n, format!("expected section `{name}`"))),
                None => Err(bad(0, format!("missing section `{name}`"))),
            }
        };

        section(&mut it, "[foreign]")?;
        let mut foreign_rows = Vec::with_capacity(f_count + 1);
        for i in 0..=f_count {
            let (n, l) = it.next().ok_or_else(|| bad(0, "truncated foreign embeddings".into()))?;
            let (tok, vals) = l.split_once('\t').ok_or_else(|| bad(n, "expected `token\\tvalues`".into()))?;
            if i == 0 && tok != UNK {
                return Err(bad(n, format!("first foreign row must be `{UNK}`")));
            }
            foreign_rows.push((Token::new(tok).map_err(|e| bad(n, e.to_string()))?, parse_row(n, vals, dim)?));
        }
        section(&mut it, "[english]")?;
        let mut english_rows = Vec::with_capacity(e_count);
        for _ in 0..e_count {
            let (n, l) = it.next().ok_or_else(|| bad(0, "truncated english embeddings".into()))?;
            let mut parts = l.splitn(3, '\t');
            let (Some(tok), Some(b), Some(vals)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad(n, "expected `token\\tbias\\tvalues`".into()));
            };
            let b: f64 = b.parse().map_err(|_| bad(n, "invalid bias".into()))?;
            english_rows.push((Token::new(tok).map_err(|e| bad(n, e.to_string()))?, b, parse_row(n, vals, dim)?));
        }
        let mut attention = Vec::new();
        if depth == 1 {
            for name in ["query", "key", "value"] {
                section(&mut it, &format!("[attention.{name}]"))?;
                for _ in 0..dim {
                    let (n, l) = it.next().ok_or_else(|| bad(0, "truncated attention weights".into()))?;
                    attention.extend(parse_row(n, l, dim)?);
                }
            }
        }
        if let Some((n, _)) = it.next() {
            return Err(bad(n, "trailing content".into()));
        }

        let foreign_words: Vec<Token> = foreign_rows[1..].iter().map(|(t, _)| t.clone()).collect();
        if foreign_fingerprint(&foreign_words) != f_hash {
            return Err(bad(fn_, "foreign vocabulary hash mismatch".into()));
        }
        let english = Vocabulary::from_words(english_rows.iter().map(|(t, _, _)| t.clone()))?;
        if english.fingerprint() != e_hash {
            return Err(bad(en, "english vocabulary hash mismatch".into()));
        }
        let mut model = SearcherModel::zeros(foreign_words, english, dim, depth)?;
        for (i, (_, vals)) in foreign_rows.iter().enumerate() {
            model.foreign_embedding_mut(i).copy_from_slice(vals);
        }
        for (k, (_, b, vals)) in english_rows.iter().enumerate() {
            model.english_embedding_mut(k).copy_from_slice(vals);
            model.set_bias(k, *b);
        }
        if depth == 1 {
            let o = model.layout.attention(0);
            model.params[o..].copy_from_slice(&attention);
        }
        Ok(model)
    }
}

fn foreign_fingerprint(words: &[Token]) -> String {
    Vocabulary::from_words(words.iter().cloned())
        .map(|v| v.fingerprint())
        .unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct SearcherFit {
    pub model: SearcherModel,
    /// Mean per-target loss of every epoch, accumulated while training.
    pub epoch_losses: Vec<f64>,
}

/// Most frequent foreign tokens, ties broken lexicographically.
fn foreign_vocabulary(bitext: &Bitext, max_size: usize) -> Vec<Token> {
    let mut counts: HashMap<&Token, usize> = HashMap::new();
    for (f, _) in bitext.pairs() {
        for t in f.tokens() {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&Token, usize)> = counts.into_iter().filter(|(t, _)| t.as_str() != UNK).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size);
    ranked.into_iter().map(|(t, _)| t.clone()).collect()
}

/// Targets for one pair: in-vocabulary English words as positives, plus either
/// the whole remaining vocabulary or sampled negatives as negatives.
pub(crate) fn targets_for<R: Rng + ?Sized>(
    english: &Sentence,
    vocab: &Vocabulary,
    config: &SearcherConfig,
    rng: &mut R,
) -> Vec<(usize, bool)> {
    let mut positives = Vec::new();
    let mut seen = HashSet::new();
    for t in english.tokens() {
        if let Some(k) = vocab.get(t.as_str()) {
            if seen.insert(k) {
                positives.push(k);
            }
        }
    }
    let count = if vocab.len() <= config.full_vocab_threshold {
        vocab.len()
    } else {
        config.negatives_per_positive * positives.len()
    };
    let negatives = sample_negatives(vocab.len(), &seen, count, rng);
    positives
        .into_iter()
        .map(|k| (k, true))
        .chain(negatives.into_iter().map(|k| (k, false)))
        .collect()
}

/// Mini-batch stochastic gradient descent on the cross-entropy objective,
/// with per-parameter AdaGrad step sizes. Deterministic for a given
/// `config.seed`.
pub fn train_searcher(bitext: &Bitext, vocab: &Vocabulary, config: &SearcherConfig) -> Result<SearcherFit> {
    if vocab.is_empty() {
        return Err(Error::Degenerate("empty effective English vocabulary".into()));
    }
    if config.batch_size == 0 || config.learning_rate <= 0.0 {
        return Err(Error::Config("batch size and learning rate must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let foreign_words = foreign_vocabulary(bitext, config.max_foreign_vocab);
    let mut model = SearcherModel::new_random(
        foreign_words,
        vocab.clone(),
        config.dim,
        config.depth,
        config.init_scale,
        &mut rng,
    )?;
    let foreign: Vec<Vec<usize>> = bitext.pairs().iter().map(|(f, _)| model.indices(f)).collect();

    let mut grad = vec![0.0; model.params.len()];
    let mut accum = vec![ADAGRAD_INITIAL_ACCUMULATOR; model.params.len()];
    let mut order: Vec<usize> = (0..bitext.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut examples = Vec::with_capacity(batch.len());
            for &p in batch {
                let targets = targets_for(&bitext.pairs()[p].1, vocab, config, &mut rng);
                count += targets.len();
                examples.push(SearcherExample { foreign: foreign[p].clone(), targets });
            }
            for ex in &examples {
                total += model.accumulate(ex, &mut grad);
            }
            // AdaGrad: rare English rows keep large steps, busy foreign rows settle
            let scale = 1.0 / batch.len() as f64;
            for ((p, g), acc) in model.params.iter_mut().zip(grad.iter_mut()).zip(accum.iter_mut()) {
                if *g != 0.0 {
                    let g_mean = *g * scale;
                    *acc += g_mean * g_mean;
                    *p -= config.learning_rate * g_mean / (acc.sqrt() + 1e-10);
                    *g = 0.0;
                }
            }
        }
        epoch_losses.push(if count > 0 { total / count as f64 } else { 0.0 });
    }
    Ok(SearcherFit { model, epoch_losses })
}
