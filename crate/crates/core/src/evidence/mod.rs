//! Sentence-level evidence `p(rel | sentence, word)`.
//!
//! Four generator families produce evidence: translation tables over text
//! ([`tt_evidence`]), translation tables over confusion networks
//! ([`cn_evidence`]), a logistic-regression ensemble over MT outputs
//! ([`mt_evidence`]) and a shared-embedding scorer ([`SearcherModel`]).
//! [`build_evidence`] evaluates one generator over a corpus and stores the
//! result as an [`EvidenceMatrix`].

mod labels;
mod matrix;
mod mt;
mod searcher;
mod table;
mod vocab;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::corpus::{Corpus, Document, DocumentBody, Query, Token, TranslationTable};
use crate::Result;

pub use labels::{labeled_instances, sample_negatives, LabeledInstance};
pub use matrix::{clamp_probability, EvidenceMatrix};
pub use mt::{
    ensemble_loss_and_gradient, fit_mt_ensemble, fit_mt_ensemble_from, mt_evidence, EnsembleConfig,
    EnsembleFit, EnsembleTrainingSet, MtEnsembleModel, MtHypothesisSet,
};
pub use searcher::{
    train_searcher, SearcherConfig, SearcherExample, SearcherFit, SearcherModel,
};
pub use table::{cn_evidence, tt_evidence};
pub use vocab::Vocabulary;

/// A fully configured evidence source.
#[derive(Debug, Clone, Copy)]
pub enum Generator<'a> {
    /// Word-aligner output; applied to text through [`tt_evidence`] and to
    /// speech through [`cn_evidence`].
    Table(&'a TranslationTable),
    MtEnsemble {
        model: &'a MtEnsembleModel,
        hyps: &'a MtHypothesisSet,
    },
    /// Speech utterances are scored through their 1-best path.
    Searcher(&'a SearcherModel),
}

impl Generator<'_> {
    /// Tag identifying the generator in matrices and mixture weights.
    pub fn tag(&self) -> String {
        match self {
            Generator::Table(t) => format!("tt:{}", t.source()),
            Generator::MtEnsemble { .. } => "mt".to_string(),
            Generator::Searcher(_) => "searcher".to_string(),
        }
    }

    fn segment_evidence(
        &self,
        doc: &Document,
        segment: usize,
        words: &BTreeSet<Token>,
    ) -> Result<Vec<(Token, f64)>> {
        match *self {
            Generator::Table(table) => {
                let map = match doc.body() {
                    DocumentBody::Text(s) => tt_evidence(table, &s[segment]),
                    DocumentBody::Speech(u) => cn_evidence(table, &u[segment]),
                };
                Ok(map.into_iter().filter(|(w, _)| words.contains(w)).collect())
            }
            Generator::MtEnsemble { model, hyps } => words
                .iter()
                .map(|w| Ok((w.clone(), mt_evidence(model, hyps, doc.id(), segment, w.as_str())?)))
                .collect(),
            Generator::Searcher(model) => {
                let sentence = match doc.body() {
                    DocumentBody::Text(s) => s[segment].clone(),
                    DocumentBody::Speech(u) => u[segment].one_best(),
                };
                let context = model.contextualize(&sentence);
                Ok(words
                    .iter()
                    .filter_map(|w| {
                        model
                            .english_vocab()
                            .get(w.as_str())
                            .map(|k| (w.clone(), model.score_context(&context, k)))
                    })
                    .collect())
            }
        }
    }
}

/// Distinct words over all phrases of all queries.
pub fn query_words(queries: &[Query]) -> BTreeSet<Token> {
    queries.iter().flat_map(|q| q.words().cloned()).collect()
}

/// Evaluates `generator` on every (document, segment, word) with the word in
/// `words`, clamping into `[ε, 1 − ε]`.
///
/// Documents are processed in parallel; the result does not depend on
/// scheduling. Query words outside the searcher's vocabulary are left absent
/// (read back as ε).
pub fn build_evidence(
    generator: Generator<'_>,
    corpus: &Corpus,
    words: &BTreeSet<Token>,
    epsilon: f64,
) -> Result<EvidenceMatrix> {
    let docs: Vec<&Document> = corpus.documents().collect();
    let per_doc = docs
        .par_iter()
        .map(|doc| {
            let mut segments = BTreeMap::new();
            for segment in 0..doc.num_segments() {
                let cells = generator.segment_evidence(doc, segment, words)?;
                if !cells.is_empty() {
                    segments.insert(segment, cells);
                }
            }
            Ok((doc.id().to_string(), segments))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut matrix = EvidenceMatrix::new(generator.tag(), epsilon);
    for (doc, segments) in per_doc {
        for (segment, cells) in segments {
            for (word, p) in cells {
                matrix.set(&doc, segment, word, p);
            }
        }
    }
    Ok(matrix)
}

/// [`build_evidence`] restricted to the words of `queries`.
pub fn build_query_evidence(
    generator: Generator<'_>,
    corpus: &Corpus,
    queries: &[Query],
    epsilon: f64,
) -> Result<EvidenceMatrix> {
    build_evidence(generator, corpus, &query_words(queries), epsilon)
}
