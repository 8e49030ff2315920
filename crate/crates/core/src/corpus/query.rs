use std::fmt;

use super::{join, normalize, Token};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    /// Documents must contain a translation of every phrase.
    Lexical,
    /// Marked with a trailing `+` on a phrase.
    Conceptual,
    /// Wrapped in `EXAMPLE_OF(...)`.
    ExampleOf,
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryKind::Lexical => "lexical",
            QueryKind::Conceptual => "conceptual",
            QueryKind::ExampleOf => "example_of",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPhrase {
    words: Vec<Token>,
}

impl QueryPhrase {
    pub fn new(words: Vec<Token>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Invariant("query phrase has no words".into()));
        }
        Ok(QueryPhrase { words })
    }

    pub fn words(&self) -> &[Token] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub kind: QueryKind,
    phrases: Vec<QueryPhrase>,
}

impl Query {
    pub fn new(id: impl Into<String>, kind: QueryKind, phrases: Vec<QueryPhrase>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Invariant(format!("query id {id:?} is empty or contains whitespace")));
        }
        if phrases.is_empty() {
            return Err(Error::Invariant(format!("query {id} has no phrases")));
        }
        Ok(Query { id, kind, phrases })
    }

    /// Shorthand for a lexical query from raw phrase strings.
    pub fn lexical(id: impl Into<String>, phrases: &[&str]) -> Result<Self> {
        let phrases = phrases
            .iter()
            .map(|p| QueryPhrase::new(normalize(p)))
            .collect::<Result<Vec<_>>>()?;
        Query::new(id, QueryKind::Lexical, phrases)
    }

    pub fn phrases(&self) -> &[QueryPhrase] {
        &self.phrases
    }

    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.phrases.iter().flat_map(|p| p.words.iter())
    }

    /// The query string as it appears in a query file.
    pub fn query_string(&self) -> String {
        let phrases: Vec<String> = self
            .phrases
            .iter()
            .map(|p| match self.kind {
                QueryKind::Conceptual => format!("{}+", join(&p.words)),
                _ => join(&p.words),
            })
            .collect();
        let body = phrases.join(", ");
        match self.kind {
            QueryKind::ExampleOf => format!("EXAMPLE_OF({body})"),
            _ => body,
        }
    }
}

/// Parses a `<id>\t<query-string>` line.
///
/// Phrases are comma separated. A trailing `+` on any phrase makes the query
/// conceptual; an `EXAMPLE_OF(...)` wrapper makes it an example-of query.
pub fn parse_query(line: &str) -> Result<Query> {
    parse_query_line(line).map_err(|message| Error::Format {
        file: "<query>".into(),
        line: 0,
        message,
    })
}

pub(super) fn parse_query_line(line: &str) -> std::result::Result<Query, String> {
    let line = line.trim_end_matches(['\r', '\n']);
    let (id, body) = line
        .split_once('\t')
        .ok_or_else(|| format!("malformed query line {line:?}: expected `<id>\\t<query>`"))?;
    let id = id.trim();
    let mut body = body.trim();
    if id.is_empty() {
        return Err(format!("malformed query line {line:?}: empty query id"));
    }
    if body.is_empty() {
        return Err(format!("malformed query line {line:?}: empty query string"));
    }

    let mut kind = QueryKind::Lexical;
    if let Some(inner) = body.strip_prefix("EXAMPLE_OF(").and_then(|b| b.strip_suffix(')')) {
        kind = QueryKind::ExampleOf;
        body = inner;
    }

    let mut phrases = Vec::new();
    for raw in body.split(',') {
        let raw = raw.trim();
        if let Some(stripped) = raw.strip_suffix('+') {
            if kind == QueryKind::Lexical {
                kind = QueryKind::Conceptual;
            }
            phrases.push(normalize(stripped));
        } else {
            phrases.push(normalize(raw));
        }
    }
    let phrases = phrases
        .into_iter()
        .map(|words| {
            QueryPhrase::new(words).map_err(|_| format!("malformed query line {line:?}: empty phrase"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Query::new(id, kind, phrases).map_err(|e| format!("malformed query line {line:?}: {e}"))
}
