use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in an input file is malformed or violates a type invariant.
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("query {id}: unsupported query type `{kind}` (only lexical queries can be retrieved)")]
    UnsupportedQuery { id: String, kind: String },

    #[error("word `{0}` is not in the vocabulary")]
    UnknownWord(String),

    #[error("no hypothesis from MT system `{system}` for document `{doc}` sentence {sentence}")]
    MissingHypothesis {
        system: String,
        doc: String,
        sentence: usize,
    },

    #[error("degenerate training data: {0}")]
    Degenerate(String),

    #[error("mixture weights do not match evidence generators: {0}")]
    TagMismatch(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(file: impl AsRef<std::path::Path>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            file: file.as_ref().display().to_string(),
            line,
            message: message.into(),
        }
    }
}
