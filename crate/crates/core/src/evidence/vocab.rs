use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::corpus::{Bitext, Token};
use crate::{Error, Result};

/// The fixed English vocabulary; index `i` is the i-th word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<Token>,
    index: HashMap<Token, usize>,
}

impl Vocabulary {
    pub fn from_words(words: impl IntoIterator<Item = Token>) -> Result<Self> {
        let words: Vec<Token> = words.into_iter().collect();
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Invariant(format!("duplicate vocabulary word {w}")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    /// The `max_size` most frequent English tokens of `bitext`; ties go to the
    /// lexicographically smaller token.
    pub fn from_bitext_english(bitext: &Bitext, max_size: usize) -> Self {
        let mut counts: HashMap<&Token, usize> = HashMap::new();
        for (_, e) in bitext.pairs() {
            for t in e.tokens() {
                *counts.entry(t).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&Token, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);
        Self::from_words(ranked.into_iter().map(|(t, _)| t.clone()))
            .expect("counted tokens are distinct")
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, i: usize) -> &Token {
        &self.words[i]
    }

    pub fn words(&self) -> &[Token] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// SHA-256 over the newline-joined words, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.as_str().as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}
