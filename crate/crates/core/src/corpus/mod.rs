//! Domain types for documents, queries, translation tables, bitext and
//! judgments, plus the text normalizer and file formats.

pub(crate) mod io;
mod query;

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::{Error, Result};

pub use io::{
    load_bitext, load_corpus, load_judgments, load_queries, load_translation_table, write_bitext,
    write_corpus, write_judgments, write_queries, write_translation_table,
};
pub use query::{parse_query, Query, QueryKind, QueryPhrase};

/// A normalized word: non-empty, lowercase, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    /// Wraps an already-normalized surface form.
    pub fn new(surface: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(Error::Invariant("token is empty".into()));
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(Error::Invariant(format!("token {surface:?} contains whitespace")));
        }
        Ok(Token(surface))
    }

    /// Normalizes `raw` and requires exactly one token to come out.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut tokens = normalize(raw);
        match tokens.len() {
            1 => Ok(tokens.pop().unwrap()),
            0 => Err(Error::Invariant(format!("{raw:?} normalizes to nothing"))),
            _ => Err(Error::Invariant(format!("{raw:?} is more than one token"))),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_edge_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '«' | '»'
                | '‹'
                | '›'
                | '“'
                | '”'
                | '„'
                | '‘'
                | '’'
                | '‚'
                | '…'
                | '–'
                | '—'
                | '¿'
                | '¡'
                | '·'
                | '،'
                | '؛'
                | '؟'
                | '۔'
                | '。'
                | '、'
                | '，'
                | '：'
                | '；'
                | '！'
                | '？'
        )
}

/// Lowercases, splits on whitespace and strips punctuation from both ends of
/// every piece. Interior punctuation is kept (`"HIV/influenza"` stays one
/// token).
pub fn normalize(raw: &str) -> Vec<Token> {
    raw.to_lowercase()
        .split_whitespace()
        .map(|piece| piece.trim_matches(is_edge_punctuation))
        .filter(|piece| !piece.is_empty())
        .map(|piece| Token(piece.to_string()))
        .collect()
}

/// Joins tokens with single spaces; `normalize(&join(&normalize(x)))` is
/// `normalize(x)`.
pub fn join(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Invariant("sentence has no tokens".into()));
        }
        Ok(Sentence { tokens })
    }

    /// Normalizes `raw` into a sentence; fails if nothing survives.
    pub fn parse(raw: &str) -> Result<Self> {
        Sentence::new(normalize(raw))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.tokens.iter().any(|t| t.as_str() == word)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.tokens))
    }
}

/// One alternative in a confusion-network slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CnArc {
    pub token: Token,
    pub prob: f64,
}

/// Slot-sum tolerance; the missing mass is the null arc.
const SLOT_SUM_TOLERANCE: f64 = 1e-6;

/// An ASR "sausage": a sequence of slots, each a set of competing tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionNetwork {
    slots: Vec<Vec<CnArc>>,
}

impl ConfusionNetwork {
    pub fn new(slots: Vec<Vec<CnArc>>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Invariant("confusion network has no slots".into()));
        }
        for (i, slot) in slots.iter().enumerate() {
            if slot.is_empty() {
                return Err(Error::Invariant(format!("confusion network slot {i} is empty")));
            }
            let mut sum = 0.0;
            for arc in slot {
                if !(arc.prob > 0.0 && arc.prob <= 1.0) {
                    return Err(Error::Invariant(format!(
                        "slot {i}: arc `{}` has probability {} outside (0, 1]",
                        arc.token, arc.prob
                    )));
                }
                sum += arc.prob;
            }
            if sum > 1.0 + SLOT_SUM_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "slot {i}: arc probabilities sum to {sum} > 1"
                )));
            }
        }
        Ok(ConfusionNetwork { slots })
    }

    pub fn slots(&self) -> &[Vec<CnArc>] {
        &self.slots
    }

    pub fn arcs(&self) -> impl Iterator<Item = &CnArc> {
        self.slots.iter().flatten()
    }

    /// Highest-probability token of every slot (first one on ties).
    pub fn one_best(&self) -> Sentence {
        let tokens = self
            .slots
            .iter()
            .map(|slot| {
                let mut best = &slot[0];
                for arc in &slot[1..] {
                    if arc.prob > best.prob {
                        best = arc;
                    }
                }
                best.token.clone()
            })
            .collect();
        Sentence { tokens }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentKind {
    Text,
    Speech,
}

impl DocumentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocumentKind::Text => "text",
            DocumentKind::Speech => "speech",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DocumentBody {
    Text(Vec<Sentence>),
    /// One confusion network per utterance; each plays the role of a sentence.
    Speech(Vec<ConfusionNetwork>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    id: String,
    body: DocumentBody,
}

impl Document {
    pub fn new(id: impl Into<String>, body: DocumentBody) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Invariant(format!(
                "document id {id:?} must be non-empty and free of whitespace"
            )));
        }
        let empty = match &body {
            DocumentBody::Text(s) => s.is_empty(),
            DocumentBody::Speech(u) => u.is_empty(),
        };
        if empty {
            return Err(Error::Invariant(format!("document {id} has an empty body")));
        }
        Ok(Document { id, body })
    }

    pub fn text(id: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self> {
        Document::new(id, DocumentBody::Text(sentences))
    }

    pub fn speech(id: impl Into<String>, utterances: Vec<ConfusionNetwork>) -> Result<Self> {
        Document::new(id, DocumentBody::Speech(utterances))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn body(&self) -> &DocumentBody {
        &self.body
    }

    pub fn kind(&self) -> DocumentKind {
        match self.body {
            DocumentBody::Text(_) => DocumentKind::Text,
            DocumentBody::Speech(_) => DocumentKind::Speech,
        }
    }

    /// Number of sentences (text) or utterances (speech).
    pub fn num_segments(&self) -> usize {
        match &self.body {
            DocumentBody::Text(s) => s.len(),
            DocumentBody::Speech(u) => u.len(),
        }
    }
}

/// Documents indexed by id, iterated in id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    documents: BTreeMap<String, Document>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut corpus = Corpus::new();
        for doc in docs {
            corpus.insert(doc)?;
        }
        Ok(corpus)
    }

    /// Adds a document, rejecting duplicate ids.
    pub fn insert(&mut self, doc: Document) -> Result<()> {
        if self.documents.contains_key(doc.id()) {
            return Err(Error::Invariant(format!("duplicate document id {}", doc.id())));
        }
        self.documents.insert(doc.id.clone(), doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.documents.contains_key(id)
    }

    pub fn documents(&self) -> impl ExactSizeIterator<Item = &Document> {
        self.documents.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.keys().map(String::as_str)
    }
}

/// Forward word translation probabilities `p(english | foreign)` from one
/// aligner.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    source: String,
    entries: BTreeMap<Token, Vec<(Token, f64)>>,
}

/// Tables may be pruned; rounding in aligner output may push a row slightly
/// above one.
pub(crate) const TABLE_ROW_TOLERANCE: f64 = 1e-4;

impl TranslationTable {
    pub fn new(source: impl Into<String>) -> Self {
        TranslationTable {
            source: source.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Builds a table from `(foreign, english, prob)` triples.
    pub fn from_entries(
        source: impl Into<String>,
        entries: impl IntoIterator<Item = (Token, Token, f64)>,
    ) -> Result<Self> {
        let mut table = TranslationTable::new(source);
        for (f, e, p) in entries {
            table.insert(f, e, p)?;
        }
        table.validate()?;
        Ok(table)
    }

    /// Adds one entry. Row sums are checked by [`TranslationTable::validate`].
    pub fn insert(&mut self, foreign: Token, english: Token, prob: f64) -> Result<()> {
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(Error::Invariant(format!(
                "translation probability p({english}|{foreign}) = {prob} outside (0, 1]"
            )));
        }
        let row = self.entries.entry(foreign).or_default();
        if row.iter().any(|(e, _)| *e == english) {
            return Err(Error::Invariant(format!("duplicate translation entry for {english}")));
        }
        row.push((english, prob));
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (f, row) in &self.entries {
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            if sum > 1.0 + TABLE_ROW_TOLERANCE {
                return Err(Error::Invariant(format!(
                    "translations of {f} sum to {sum} > 1"
                )));
            }
        }
        Ok(())
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn translations(&self, foreign: &str) -> &[(Token, f64)] {
        self.entries.get(foreign).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Token, &[(Token, f64)])> {
        self.entries.iter().map(|(f, row)| (f, row.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sentence-aligned parallel text, foreign side first.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitext {
    pairs: Vec<(Sentence, Sentence)>,
}

impl Bitext {
    pub fn new(pairs: Vec<(Sentence, Sentence)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Invariant("bitext has no sentence pairs".into()));
        }
        Ok(Bitext { pairs })
    }

    pub fn pairs(&self) -> &[(Sentence, Sentence)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The foreign side as a single text document with id
    /// [`BITEXT_DOC_ID`], sentence `i` being pair `i`. Evidence matrices and
    /// MT hypotheses over held-out bitext are addressed through this id.
    pub fn foreign_corpus(&self) -> Corpus {
        let sentences = self.pairs.iter().map(|(f, _)| f.clone()).collect();
        let doc = Document {
            id: BITEXT_DOC_ID.to_string(),
            body: DocumentBody::Text(sentences),
        };
        let mut corpus = Corpus::new();
        corpus.documents.insert(doc.id.clone(), doc);
        corpus
    }
}

/// Document id under which a bitext's foreign side is addressed.
pub const BITEXT_DOC_ID: &str = "bitext";

/// Gold relevance: query id to the set of relevant document ids. A query
/// with no line in the judgments file has an empty relevant set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Judgments {
    relevant: BTreeMap<String, BTreeSet<String>>,
}

impl Judgments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: impl Into<String>, doc: impl Into<String>) {
        self.relevant.entry(query.into()).or_default().insert(doc.into());
    }

    /// Relevant documents for `query`, empty when the query has no judgments.
    pub fn relevant(&self, query: &str) -> BTreeSet<String> {
        self.relevant.get(query).cloned().unwrap_or_default()
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.relevant.keys().map(String::as_str)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.relevant
            .iter()
            .flat_map(|(q, docs)| docs.iter().map(move |d| (q.as_str(), d.as_str())))
    }

    /// Every referenced document must exist in `corpus`.
    pub fn validate_against(&self, corpus: &Corpus) -> Result<()> {
        for (q, d) in self.pairs() {
            if !corpus.contains(d) {
                return Err(Error::Invariant(format!(
                    "judgment for query {q} references unknown document {d}"
                )));
            }
        }
        Ok(())
    }
}
