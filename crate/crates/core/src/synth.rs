//! Seeded synthetic datasets with planted relevance.
//!
//! A random bijection pairs foreign and English words. Documents are filled
//! with Zipf-distributed foreign words; for each query a set of documents is
//! planted with the translation equivalents of every query phrase, all words
//! of a phrase in one sentence. Distractor documents receive some of a
//! query's words but always lack at least one, so judgments are exactly the
//! planted documents. Aligner tables, confusion networks and MT output are
//! noisy views of the same ground truth.
//!
//! Every component draws from its own ChaCha stream, so changing e.g. the
//! speech fraction leaves the underlying text untouched.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    write_bitext, write_corpus, write_judgments, write_queries, write_translation_table, Bitext, CnArc,
    ConfusionNetwork, Corpus, Document, Judgments, Query, QueryKind, QueryPhrase, Sentence, Token,
    TranslationTable, BITEXT_DOC_ID,
};
use crate::evidence::MtHypothesisSet;
use crate::{Error, Result};

/// File names inside a dataset directory.
pub mod files {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const QUERIES: &str = "queries.tsv";
    pub const JUDGMENTS: &str = "judgments.tsv";
    pub const BITEXT: &str = "bitext.tsv";
    pub const HELDOUT: &str = "heldout.tsv";
    pub const HYPOTHESES: &str = "hyps.tsv";
    pub const HELDOUT_HYPOTHESES: &str = "heldout_hyps.tsv";
    pub const DICTIONARY: &str = "dictionary.tsv";

    /// Table `i` (1-based) is `aligner<i>.tsv`, giving source tag `aligner<i>`.
    pub fn table(i: usize) -> String {
        format!("aligner{i}.tsv")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub foreign_vocab: usize,
    pub english_vocab: usize,
    /// Fraction of aligner-table rows that are corrupted; confusion networks
    /// put `1 − noise` on the true token.
    pub noise: f64,
    pub docs: usize,
    pub sentences_per_doc: (usize, usize),
    pub sentence_len: (usize, usize),
    pub queries: usize,
    pub phrases_per_query: (usize, usize),
    pub phrase_len: (usize, usize),
    pub speech_fraction: f64,
    /// Arcs per confusion-network slot.
    pub confusion_depth: usize,
    /// Fraction of documents planted as relevant for each query.
    pub planting_rate: f64,
    /// Fraction of documents receiving an incomplete set of a query's words.
    pub distractor_rate: f64,
    pub bitext_pairs: usize,
    pub heldout_pairs: usize,
    /// One synthetic MT system per entry, with that word-error rate.
    pub mt_word_error_rates: Vec<f64>,
    /// Number of independently perturbed aligner tables.
    pub tables: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            foreign_vocab: 2000,
            english_vocab: 2000,
            noise: 0.1,
            docs: 200,
            sentences_per_doc: (3, 8),
            sentence_len: (4, 12),
            queries: 20,
            phrases_per_query: (1, 2),
            phrase_len: (1, 2),
            speech_fraction: 0.2,
            confusion_depth: 3,
            planting_rate: 0.05,
            distractor_rate: 0.05,
            bitext_pairs: 2000,
            heldout_pairs: 300,
            mt_word_error_rates: vec![0.2, 0.35],
            tables: 2,
        }
    }
}

/// Offset into the frequency ranking where query words start; the very
/// top ranks are left to filler.
const RESERVED_RANK_OFFSET: usize = 10;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [
            ("noise", self.noise),
            ("speech_fraction", self.speech_fraction),
            ("planting_rate", self.planting_rate),
            ("distractor_rate", self.distractor_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        for &w in &self.mt_word_error_rates {
            if !(0.0..=1.0).contains(&w) {
                return bad(format!("MT word-error rate must lie in [0, 1], got {w}"));
            }
        }
        for (name, v) in [
            ("foreign_vocab", self.foreign_vocab),
            ("english_vocab", self.english_vocab),
            ("queries", self.queries),
            ("confusion_depth", self.confusion_depth),
            ("bitext_pairs", self.bitext_pairs),
            ("heldout_pairs", self.heldout_pairs),
            ("tables", self.tables),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.docs < 2 {
            return bad("docs must be at least 2 so some documents are not relevant".into());
        }
        if self.mt_word_error_rates.is_empty() {
            return bad("at least one MT system is required".into());
        }
        for (name, (lo, hi)) in [
            ("sentences_per_doc", self.sentences_per_doc),
            ("sentence_len", self.sentence_len),
            ("phrases_per_query", self.phrases_per_query),
            ("phrase_len", self.phrase_len),
        ] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} range {lo}..={hi} is empty or starts at 0"));
            }
        }
        if self.phrase_len.1 > self.sentence_len.1 {
            return bad(format!(
                "phrase length {} exceeds the maximum sentence length {}",
                self.phrase_len.1, self.sentence_len.1
            ));
        }
        let needed = self.queries * self.phrases_per_query.1 * self.phrase_len.1;
        let dictionary = self.foreign_vocab.min(self.english_vocab);
        if RESERVED_RANK_OFFSET + needed >= dictionary {
            return bad(format!(
                "a vocabulary of {dictionary} translatable words cannot hold {needed} query words plus filler"
            ));
        }
        if self.speech_fraction > 0.0 {
            if self.noise >= 1.0 {
                return bad("speech needs noise < 1 so the true arc keeps positive mass".into());
            }
            let depth = self.confusion_depth as f64;
            if self.noise > 0.0 && self.confusion_depth > 1 && 1.0 - self.noise < self.noise / (depth - 1.0) {
                return bad(format!(
                    "noise {} at depth {} would make a confusion arc outweigh the true token",
                    self.noise, self.confusion_depth
                ));
            }
        }
        Ok(())
    }

    fn planted_per_query(&self) -> usize {
        ((self.planting_rate * self.docs as f64).round() as usize).clamp(1, self.docs - 1)
    }
}

/// Everything `generate` produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub corpus: Corpus,
    pub queries: Vec<Query>,
    pub judgments: Judgments,
    /// Training bitext for the searcher.
    pub bitext: Bitext,
    /// Held-out bitext for fitting the ensemble and mixture weights.
    pub heldout: Bitext,
    pub tables: Vec<TranslationTable>,
    pub hypotheses: MtHypothesisSet,
    /// MT output for the held-out bitext, keyed under the bitext document id.
    pub heldout_hypotheses: MtHypothesisSet,
    /// The true foreign → English word pairs.
    pub dictionary: Vec<(Token, Token)>,
}

impl Dataset {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_corpus(dir.join(files::CORPUS), &self.corpus)?;
        write_queries(dir.join(files::QUERIES), &self.queries)?;
        write_judgments(dir.join(files::JUDGMENTS), &self.judgments)?;
        write_bitext(dir.join(files::BITEXT), &self.bitext)?;
        write_bitext(dir.join(files::HELDOUT), &self.heldout)?;
        for (i, table) in self.tables.iter().enumerate() {
            write_translation_table(dir.join(files::table(i + 1)), table)?;
        }
        self.hypotheses.write(dir.join(files::HYPOTHESES))?;
        self.heldout_hypotheses.write(dir.join(files::HELDOUT_HYPOTHESES))?;
        let mut dictionary = TranslationTable::new("dictionary");
        for (f, e) in &self.dictionary {
            dictionary.insert(f.clone(), e.clone(), 1.0)?;
        }
        write_translation_table(dir.join(files::DICTIONARY), &dictionary)
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            docs: self.corpus.len(),
            speech_docs: self
                .corpus
                .documents()
                .filter(|d| d.kind() == crate::corpus::DocumentKind::Speech)
                .count(),
            queries: self.queries.len(),
            judgments: self.judgments.pairs().count(),
            bitext_pairs: self.bitext.len(),
            heldout_pairs: self.heldout.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetSummary {
    pub docs: usize,
    pub speech_docs: usize,
    pub queries: usize,
    pub judgments: usize,
    pub bitext_pairs: usize,
    pub heldout_pairs: usize,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "docs={} speech_docs={} queries={} judgments={} bitext_pairs={} heldout_pairs={}",
            self.docs, self.speech_docs, self.queries, self.judgments, self.bitext_pairs, self.heldout_pairs
        )
    }
}

// independent random streams
const STREAM_DICTIONARY: u64 = 1;
const STREAM_BITEXT: u64 = 2;
const STREAM_DOCUMENTS: u64 = 3;
const STREAM_QUERIES: u64 = 4;
const STREAM_TABLES: u64 = 5;
const STREAM_MT: u64 = 6;
const STREAM_SPEECH: u64 = 7;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const FOREIGN_CONSONANTS: &[&str] = &["b", "d", "g", "k", "m", "n", "p", "r", "s", "t", "z"];
const FOREIGN_VOWELS: &[&str] = &["a", "i", "u"];
const ENGLISH_CONSONANTS: &[&str] = &["b", "c", "d", "f", "h", "l", "m", "n", "p", "r", "s", "t", "w"];
const ENGLISH_VOWELS: &[&str] = &["a", "e", "o"];

/// Pronounceable, distinct word for `index`: its base-S digits (at least
/// two) rendered as syllables.
fn word(index: usize, consonants: &[&str], vowels: &[&str]) -> Token {
    let base = consonants.len() * vowels.len();
    let mut digits = Vec::new();
    let mut n = index;
    loop {
        digits.push(n % base);
        n /= base;
        if n == 0 && digits.len() >= 2 {
            break;
        }
    }
    let s: String = digits
        .iter()
        .rev()
        .map(|&d| format!("{}{}", consonants[d / vowels.len()], vowels[d % vowels.len()]))
        .collect();
    Token::new(s).expect("syllables form a valid token")
}

struct Lexicon {
    foreign: Vec<Token>,
    english: Vec<Token>,
    /// `translation[f]` is the English index of foreign word `f`, if any.
    translation: Vec<Option<usize>>,
    zipf: WeightedIndex<f64>,
}

impl Lexicon {
    fn new(spec: &SynthSpec) -> Self {
        let mut rng = stream(spec.seed, STREAM_DICTIONARY);
        let foreign: Vec<Token> = (0..spec.foreign_vocab)
            .map(|i| word(i, FOREIGN_CONSONANTS, FOREIGN_VOWELS))
            .collect();
        let english: Vec<Token> = (0..spec.english_vocab)
            .map(|i| word(i, ENGLISH_CONSONANTS, ENGLISH_VOWELS))
            .collect();
        let mut targets: Vec<usize> = (0..spec.english_vocab).collect();
        targets.shuffle(&mut rng);
        let translation = (0..spec.foreign_vocab).map(|f| targets.get(f).copied()).collect();
        let zipf = WeightedIndex::new((0..spec.foreign_vocab).map(|r| 1.0 / (r + 1) as f64))
            .expect("positive weights");
        Lexicon { foreign, english, translation, zipf }
    }

    fn translate(&self, foreign: &[usize]) -> Vec<usize> {
        foreign.iter().filter_map(|&f| self.translation[f]).collect()
    }

    fn sentence(tokens: &[Token], idx: &[usize]) -> Sentence {
        Sentence::new(idx.iter().map(|&i| tokens[i].clone()).collect()).expect("non-empty sentence")
    }
}

/// Builds a dataset. The result is a pure function of `spec`.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let lex = Lexicon::new(spec);

    // query words: distinct translatable foreign words just below the top ranks
    let mut qrng = stream(spec.seed, STREAM_QUERIES);
    let mut shapes = Vec::with_capacity(spec.queries);
    for _ in 0..spec.queries {
        let phrases = qrng.random_range(spec.phrases_per_query.0..=spec.phrases_per_query.1);
        let lens: Vec<usize> = (0..phrases)
            .map(|_| qrng.random_range(spec.phrase_len.0..=spec.phrase_len.1))
            .collect();
        shapes.push(lens);
    }
    let needed: usize = shapes.iter().flatten().sum();
    let mut pool: Vec<usize> = (0..spec.foreign_vocab)
        .filter(|&f| lex.translation[f].is_some())
        .skip(RESERVED_RANK_OFFSET)
        .take(needed)
        .collect();
    pool.shuffle(&mut qrng);
    let reserved: BTreeSet<usize> = pool.iter().copied().collect();
    let mut pool = pool.into_iter();
    // per query, per phrase, foreign word indices
    let query_words: Vec<Vec<Vec<usize>>> = shapes
        .iter()
        .map(|lens| lens.iter().map(|&l| pool.by_ref().take(l).collect()).collect())
        .collect();

    let queries = query_words
        .iter()
        .enumerate()
        .map(|(i, phrases)| {
            let phrases = phrases
                .iter()
                .map(|p| QueryPhrase::new(p.iter().map(|&f| lex.english[lex.translation[f].unwrap()].clone()).collect()))
                .collect::<Result<Vec<_>>>()?;
            Query::new(format!("q{:03}", i + 1), QueryKind::Lexical, phrases)
        })
        .collect::<Result<Vec<_>>>()?;

    // document filler never uses query words
    let filler: Vec<usize> = (0..spec.foreign_vocab).filter(|f| !reserved.contains(f)).collect();
    let filler_zipf =
        WeightedIndex::new(filler.iter().map(|&r| 1.0 / (r + 1) as f64)).expect("positive weights");
    let mut drng = stream(spec.seed, STREAM_DOCUMENTS);
    let mut docs: Vec<Vec<Vec<usize>>> = (0..spec.docs)
        .map(|_| {
            let n = drng.random_range(spec.sentences_per_doc.0..=spec.sentences_per_doc.1);
            (0..n)
                .map(|_| {
                    let len = drng.random_range(spec.sentence_len.0..=spec.sentence_len.1);
                    (0..len).map(|_| filler[filler_zipf.sample(&mut drng)]).collect()
                })
                .collect()
        })
        .collect();

    let planted = spec.planted_per_query();
    let distractors = ((spec.distractor_rate * spec.docs as f64).round() as usize).min(spec.docs - planted);
    let mut judgments = Judgments::new();
    for (query, phrases) in queries.iter().zip(&query_words) {
        let mut order: Vec<usize> = (0..spec.docs).collect();
        order.shuffle(&mut qrng);
        for &d in &order[..planted] {
            for phrase in phrases {
                let s = qrng.random_range(0..docs[d].len());
                insert_words(&mut docs[d][s], phrase, &mut qrng);
            }
            judgments.insert(query.id.clone(), doc_id(d));
        }
        // drop one word of the query, scatter the rest
        let mut words: Vec<usize> = phrases.iter().flatten().copied().collect();
        if words.len() < 2 {
            continue;
        }
        words.remove(qrng.random_range(0..words.len()));
        for &d in &order[planted..planted + distractors] {
            for &w in &words {
                let s = qrng.random_range(0..docs[d].len());
                insert_words(&mut docs[d][s], &[w], &mut qrng);
            }
        }
    }

    let mut srng = stream(spec.seed, STREAM_SPEECH);
    let corpus = Corpus::from_documents(docs.iter().enumerate().map(|(d, sentences)| {
        let speech = spec.speech_fraction > 0.0 && srng.random_bool(spec.speech_fraction);
        if speech {
            let cns = sentences.iter().map(|s| confusion_network(spec, &lex, s, &mut srng)).collect();
            Document::speech(doc_id(d), cns).expect("non-empty document")
        } else {
            let text = sentences.iter().map(|s| Lexicon::sentence(&lex.foreign, s)).collect();
            Document::text(doc_id(d), text).expect("non-empty document")
        }
    }))?;

    let mut brng = stream(spec.seed, STREAM_BITEXT);
    let mut bitext_sentences = |n: usize| -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let len = brng.random_range(spec.sentence_len.0..=spec.sentence_len.1);
            let s: Vec<usize> = (0..len).map(|_| lex.zipf.sample(&mut brng)).collect();
            if !lex.translate(&s).is_empty() {
                out.push(s);
            }
        }
        out
    };
    let train = bitext_sentences(spec.bitext_pairs);
    let held = bitext_sentences(spec.heldout_pairs);
    let bitext = make_bitext(&lex, &train)?;
    let heldout = make_bitext(&lex, &held)?;

    let mut trng = stream(spec.seed, STREAM_TABLES);
    let tables = (1..=spec.tables)
        .map(|i| aligner_table(spec, &lex, &format!("aligner{i}"), &mut trng))
        .collect::<Result<Vec<_>>>()?;

    let mut mrng = stream(spec.seed, STREAM_MT);
    let mut hypotheses = MtHypothesisSet::new();
    let mut heldout_hypotheses = MtHypothesisSet::new();
    for (m, &wer) in spec.mt_word_error_rates.iter().enumerate() {
        let system = format!("mt{}", m + 1);
        for (d, sentences) in docs.iter().enumerate() {
            for (s, sentence) in sentences.iter().enumerate() {
                let hyp = mt_output(spec, &lex, sentence, wer, &mut mrng);
                hypotheses.insert(&system, &doc_id(d), s, hyp);
            }
        }
        for (i, sentence) in held.iter().enumerate() {
            let hyp = mt_output(spec, &lex, sentence, wer, &mut mrng);
            heldout_hypotheses.insert(&system, BITEXT_DOC_ID, i, hyp);
        }
    }

    let dictionary = (0..spec.foreign_vocab)
        .filter_map(|f| lex.translation[f].map(|e| (lex.foreign[f].clone(), lex.english[e].clone())))
        .collect();

    let dataset = Dataset {
        corpus,
        queries,
        judgments,
        bitext,
        heldout,
        tables,
        hypotheses,
        heldout_hypotheses,
        dictionary,
    };
    debug_assert!(judgments_are_exact(&dataset));
    Ok(dataset)
}

fn doc_id(d: usize) -> String {
    format!("doc{:05}", d + 1)
}

/// Inserts `words` at random positions of `sentence`, keeping their order.
fn insert_words(sentence: &mut Vec<usize>, words: &[usize], rng: &mut ChaCha8Rng) {
    let mut at = 0;
    for &w in words {
        at = rng.random_range(at..=sentence.len());
        sentence.insert(at, w);
        at += 1;
    }
}

fn confusion_network(spec: &SynthSpec, lex: &Lexicon, sentence: &[usize], rng: &mut ChaCha8Rng) -> ConfusionNetwork {
    let alternatives = if spec.noise > 0.0 { spec.confusion_depth - 1 } else { 0 };
    let slots = sentence
        .iter()
        .map(|&f| {
            let mut slot = vec![CnArc {
                token: lex.foreign[f].clone(),
                prob: 1.0 - spec.noise,
            }];
            if alternatives > 0 {
                let share = spec.noise / alternatives as f64;
                let picks = index::sample(rng, spec.foreign_vocab - 1, alternatives.min(spec.foreign_vocab - 1));
                for i in picks.into_iter() {
                    let other = if i >= f { i + 1 } else { i };
                    slot.push(CnArc { token: lex.foreign[other].clone(), prob: share });
                }
            }
            slot
        })
        .collect();
    ConfusionNetwork::new(slots).expect("arc masses sum to one")
}

fn make_bitext(lex: &Lexicon, sentences: &[Vec<usize>]) -> Result<Bitext> {
    Bitext::new(
        sentences
            .iter()
            .map(|s| (Lexicon::sentence(&lex.foreign, s), Lexicon::sentence(&lex.english, &lex.translate(s))))
            .collect(),
    )
}

/// The true dictionary with a `noise` fraction of rows corrupted the way an
/// aligner errs: the true translation keeps a majority share and one to three
/// wrong English words split the rest.
fn aligner_table(spec: &SynthSpec, lex: &Lexicon, source: &str, rng: &mut ChaCha8Rng) -> Result<TranslationTable> {
    let mut table = TranslationTable::new(source);
    for (f, e) in lex.translation.iter().enumerate() {
        let Some(e) = *e else { continue };
        let foreign = lex.foreign[f].clone();
        if spec.noise > 0.0 && spec.english_vocab > 1 && rng.random_bool(spec.noise) {
            let keep = rng.random_range(0.5..0.9);
            let wrong = rng.random_range(1..=3usize).min(spec.english_vocab - 1);
            let shares: Vec<f64> = (0..wrong).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = shares.iter().sum();
            table.insert(foreign.clone(), lex.english[e].clone(), keep)?;
            for (i, share) in index::sample(rng, spec.english_vocab - 1, wrong).into_iter().zip(shares) {
                let other = if i >= e { i + 1 } else { i };
                table.insert(foreign.clone(), lex.english[other].clone(), (1.0 - keep) * share / total)?;
            }
        } else {
            table.insert(foreign, lex.english[e].clone(), 1.0)?;
        }
    }
    table.validate()?;
    Ok(table)
}

/// Word-by-word translation where each word is replaced by a uniformly
/// random English word with probability `wer`.
fn mt_output(spec: &SynthSpec, lex: &Lexicon, sentence: &[usize], wer: f64, rng: &mut ChaCha8Rng) -> Vec<Token> {
    lex.translate(sentence)
        .into_iter()
        .map(|e| {
            let e = if wer > 0.0 && rng.random_bool(wer) {
                rng.random_range(0..spec.english_vocab)
            } else {
                e
            };
            lex.english[e].clone()
        })
        .collect()
}

/// True when the judgments are exactly the documents in which, for every
/// phrase of the query, some sentence holds all of its words' translation
/// equivalents under the true dictionary.
pub fn judgments_are_exact(dataset: &Dataset) -> bool {
    let to_english: std::collections::BTreeMap<&Token, &Token> =
        dataset.dictionary.iter().map(|(f, e)| (f, e)).collect();
    let english_sentences = |doc: &Document| -> Vec<BTreeSet<Token>> {
        let sentences: Vec<Sentence> = match doc.body() {
            crate::corpus::DocumentBody::Text(s) => s.clone(),
            crate::corpus::DocumentBody::Speech(u) => u.iter().map(|cn| cn.one_best()).collect(),
        };
        sentences
            .iter()
            .map(|s| s.tokens().iter().filter_map(|t| to_english.get(t).map(|e| (*e).clone())).collect())
            .collect()
    };
    let translated: Vec<(String, Vec<BTreeSet<Token>>)> = dataset
        .corpus
        .documents()
        .map(|d| (d.id().to_string(), english_sentences(d)))
        .collect();
    dataset.queries.iter().all(|q| {
        let truth: BTreeSet<String> = translated
            .iter()
            .filter(|(_, sentences)| {
                q.phrases()
                    .iter()
                    .all(|p| sentences.iter().any(|s| p.words().iter().all(|w| s.contains(w))))
            })
            .map(|(id, _)| id.clone())
            .collect();
        truth == dataset.judgments.relevant(&q.id)
    })
}
