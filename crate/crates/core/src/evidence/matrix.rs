use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::corpus::io::{create, fields, finish, read_lines};
use crate::corpus::Token;
use crate::{Error, Result};

/// Clamps into `[ε, 1 − ε]`.
pub fn clamp_probability(p: f64, epsilon: f64) -> f64 {
    debug_assert!(!p.is_nan(), "probability is NaN");
    p.clamp(epsilon, 1.0 - epsilon)
}

/// Sparse `p(rel | sentence, word)` for one generator. Absent cells read as ε.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceMatrix {
    generator: String,
    epsilon: f64,
    cells: BTreeMap<String, BTreeMap<usize, BTreeMap<Token, f64>>>,
}

impl EvidenceMatrix {
    pub fn new(generator: impl Into<String>, epsilon: f64) -> Self {
        EvidenceMatrix {
            generator: generator.into(),
            epsilon,
            cells: BTreeMap::new(),
        }
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    /// The same cells under another generator tag.
    pub fn with_generator(mut self, generator: impl Into<String>) -> Self {
        self.generator = generator.into();
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Stores `p` clamped into `[ε, 1 − ε]`.
    pub fn set(&mut self, doc: &str, segment: usize, word: Token, p: f64) {
        let p = clamp_probability(p, self.epsilon);
        self.cells
            .entry(doc.to_string())
            .or_default()
            .entry(segment)
            .or_default()
            .insert(word, p);
    }

    pub fn get(&self, doc: &str, segment: usize, word: &str) -> f64 {
        self.lookup(doc, segment, word).unwrap_or(self.epsilon)
    }

    /// The stored value, `None` when absent.
    pub fn lookup(&self, doc: &str, segment: usize, word: &str) -> Option<f64> {
        self.cells
            .get(doc)
            .and_then(|s| s.get(&segment))
            .and_then(|w| w.get(word))
            .copied()
    }

    pub fn segment(&self, doc: &str, segment: usize) -> Option<&BTreeMap<Token, f64>> {
        self.cells.get(doc).and_then(|s| s.get(&segment))
    }

    /// Stored cells in (document, segment, word) order.
    pub fn cells(&self) -> impl Iterator<Item = (&str, usize, &Token, f64)> {
        self.cells.iter().flat_map(|(doc, segs)| {
            segs.iter().flat_map(move |(&i, words)| {
                words.iter().map(move |(w, &p)| (doc.as_str(), i, w, p))
            })
        })
    }

    /// Number of stored cells.
    pub fn len(&self) -> usize {
        self.cells.values().flat_map(|s| s.values()).map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// TSV `doc\tsegment\tword\tprob` under a `#generator=<tag>` header.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "#generator={}", self.generator).map_err(io)?;
        for (doc, i, word, p) in self.cells() {
            writeln!(w, "{doc}\t{i}\t{word}\t{p}").map_err(io)?;
        }
        finish(path, w)
    }

    pub fn load(path: impl AsRef<Path>, epsilon: f64) -> Result<Self> {
        let path = path.as_ref();
        let lines = read_lines(path)?;
        let mut lines = lines.into_iter();
        let generator = match lines.next() {
            Some((_, header)) => match header.strip_prefix("#generator=") {
                Some(tag) => tag.trim().to_string(),
                None => return Err(Error::format(path, 1, "missing `#generator=` header")),
            },
            None => return Err(Error::format(path, 1, "empty evidence file")),
        };
        let mut matrix = EvidenceMatrix::new(generator, epsilon);
        for (lineno, line) in lines {
            let parts = fields(path, lineno, &line, 4)?;
            let segment: usize = parts[1]
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("invalid sentence index {:?}", parts[1])))?;
            let word = Token::new(parts[2]).map_err(|e| Error::format(path, lineno, e.to_string()))?;
            let p: f64 = parts[3]
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("invalid probability {:?}", parts[3])))?;
            if !(epsilon..=1.0 - epsilon).contains(&p) {
                return Err(Error::format(
                    path,
                    lineno,
                    format!("probability {p} outside [{epsilon}, {}]", 1.0 - epsilon),
                ));
            }
            matrix.set(parts[0], segment, word, p);
        }
        Ok(matrix)
    }
}
