//! Probabilistic cross-lingual retrieval.
//!
//! English queries are matched against foreign-language text and speech
//! documents through sentence-level word relevance probabilities
//! `p(rel | sentence, word)`. Several evidence generators produce those
//! probabilities, a mixture fitted by EM fuses them, and the fused evidence is
//! lifted to calibrated query-document probabilities. Per query, the
//! thresholder returns the document set that maximizes expected query value,
//! and the scorer evaluates returned sets with mAQWV.
//!
//! Pipeline, in module order:
//!
//! - [`corpus`]: domain types, normalization and file formats
//! - [`evidence`]: translation-table, confusion-network, MT-ensemble and
//!   shared-embedding generators
//! - [`combiner`]: EM-fitted convex mixture of evidence matrices
//! - [`relevance`]: sentence to document to query probability algebra
//! - [`thresholder`]: expected-QV cutoff selection
//! - [`scorer`]: QV and mAQWV
//! - [`synth`]: seeded synthetic datasets with planted relevance

pub mod combiner;
pub mod corpus;
mod error;
pub mod evidence;
pub mod relevance;
pub mod scorer;
pub mod synth;
pub mod thresholder;

pub use error::{Error, Result};

/// Default probability floor; every stored probability lies in `[ε, 1 − ε]`.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Default false-alarm cost used by MATERIAL-style evaluations.
pub const DEFAULT_BETA: f64 = 40.0;

/// Default scaling applied to the expected number of relevant documents.
pub const DEFAULT_GAMMA: f64 = 1.3;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
