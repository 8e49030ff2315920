//! From sentence-level evidence to query-document relevance probabilities.
//!
//! A phrase is relevant to a sentence when every phrase word is; to a
//! document when it is relevant to at least one sentence (sentences treated
//! as independent); a lexical query is relevant when every phrase is. All
//! products and complements are accumulated in log space.

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use crate::corpus::io::{create, finish, read_lines};
use crate::corpus::{Corpus, Document, Query, QueryKind, QueryPhrase};
use crate::evidence::EvidenceMatrix;
use crate::{Error, Result};

/// `Π p_i`, computed as `exp(Σ ln p_i)`.
pub fn conjunction(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs.into_iter().map(f64::ln).sum::<f64>().exp()
}

/// `1 − Π (1 − p_i)`, computed as `−expm1(Σ ln1p(−p_i))`.
pub fn union(probs: impl IntoIterator<Item = f64>) -> f64 {
    -probs.into_iter().map(|p| (-p).ln_1p()).sum::<f64>().exp_m1()
}

/// Product of the phrase words' evidence in one sentence; absent words
/// contribute ε.
pub fn phrase_sentence_rel(ev: &EvidenceMatrix, doc: &str, segment: usize, phrase: &QueryPhrase) -> f64 {
    conjunction(phrase.words().iter().map(|w| ev.get(doc, segment, w.as_str())))
}

/// Probability that at least one sentence of `doc` is relevant to the phrase.
pub fn phrase_doc_rel(ev: &EvidenceMatrix, doc: &Document, phrase: &QueryPhrase) -> f64 {
    union((0..doc.num_segments()).map(|i| phrase_sentence_rel(ev, doc.id(), i, phrase)))
}

/// Product over phrases of [`phrase_doc_rel`]. Only lexical queries are
/// supported.
pub fn query_doc_rel(ev: &EvidenceMatrix, doc: &Document, query: &Query) -> Result<f64> {
    require_lexical(query)?;
    Ok(conjunction(query.phrases().iter().map(|p| phrase_doc_rel(ev, doc, p))))
}

pub(crate) fn require_lexical(query: &Query) -> Result<()> {
    if query.kind != QueryKind::Lexical {
        return Err(Error::UnsupportedQuery {
            id: query.id.clone(),
            kind: query.kind.to_string(),
        });
    }
    Ok(())
}

/// Documents of one query ordered by descending probability, ties by
/// ascending document id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    entries: Vec<(String, f64)>,
}

fn ranking_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

impl RankedList {
    /// Sorts `entries` into ranking order.
    pub fn new(query_id: impl Into<String>, mut entries: Vec<(String, f64)>) -> Result<Self> {
        if let Some((d, p)) = entries.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invariant(format!("probability {p} of {d} outside [0, 1]")));
        }
        entries.sort_by(ranking_order);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invariant("document ranked twice".into()));
        }
        Ok(RankedList { query_id: query_id.into(), entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, p)| *p).collect()
    }

    /// Document ids of the first `k` entries.
    pub fn top(&self, k: usize) -> impl Iterator<Item = &str> {
        self.entries.iter().take(k).map(|(d, _)| d.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Scores every document of `corpus` against a lexical query.
pub fn rank(ev: &EvidenceMatrix, corpus: &Corpus, query: &Query) -> Result<RankedList> {
    require_lexical(query)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let entries = corpus
        .documents()
        .map(|doc| Ok((doc.id().to_string(), query_doc_rel(ev, doc, query)?)))
        .collect::<Result<Vec<_>>>()?;
    RankedList::new(query.id.clone(), entries)
}

/// Run file lines `query-id doc-id rank prob run-tag`, ranks starting at 1.
pub fn write_run(path: impl AsRef<Path>, lists: &[RankedList], run_tag: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for list in lists {
        for (i, (doc, p)) in list.entries.iter().enumerate() {
            writeln!(w, "{} {doc} {} {p} {run_tag}", list.query_id, i + 1).map_err(|e| Error::io(path, e))?;
        }
    }
    finish(path, w)
}

/// Reads a run file back, one list per query in order of first appearance.
pub fn load_run(path: impl AsRef<Path>) -> Result<Vec<RankedList>> {
    let path = path.as_ref();
    let mut lists: Vec<(String, Vec<(String, f64)>)> = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(Error::format(path, lineno, "expected `query doc rank prob tag`"));
        }
        let p: f64 = parts[3]
            .parse()
            .map_err(|_| Error::format(path, lineno, format!("invalid probability {:?}", parts[3])))?;
        match lists.last_mut() {
            Some((q, entries)) if q == parts[0] => entries.push((parts[1].to_string(), p)),
            _ => {
                if lists.iter().any(|(q, _)| q == parts[0]) {
                    return Err(Error::format(path, lineno, format!("query {} is not contiguous", parts[0])));
                }
                lists.push((parts[0].to_string(), vec![(parts[1].to_string(), p)]));
            }
        }
    }
    lists
        .into_iter()
        .map(|(q, entries)| RankedList::new(q, entries))
        .collect()
}
