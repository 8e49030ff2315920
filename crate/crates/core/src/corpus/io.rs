//! Readers and writers for the on-disk formats.
//!
//! | file          | format                                                      |
//! |---------------|-------------------------------------------------------------|
//! | documents     | JSON lines, `{"id", "kind": "text", "sentences": [...]}` or `{"id", "kind": "speech", "utterances": [[[tok, p], ...], ...]}` |
//! | table         | `foreign\tenglish\tprob`                                    |
//! | bitext        | `foreign sentence\tenglish sentence`                        |
//! | queries       | `id\tquery string`                                          |
//! | judgments     | `query-id\tdoc-id`                                          |
//!
//! Blank lines are ignored everywhere.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::query::parse_query_line;
use super::*;

pub(crate) fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Splits a TSV line into exactly `n` fields.
pub(crate) fn fields<'a>(path: &Path, lineno: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
    if parts.len() != n {
        return Err(Error::format(
            path,
            lineno,
            format!("expected {n} tab-separated fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utterances: Option<Vec<Vec<Vec<(String, f64)>>>>,
}

fn record_to_document(rec: DocumentRecord) -> std::result::Result<Document, String> {
    match (rec.kind.as_str(), rec.sentences, rec.utterances) {
        ("text", Some(sentences), None) => {
            let sentences = sentences
                .iter()
                .enumerate()
                .map(|(i, s)| Sentence::parse(s).map_err(|e| format!("sentence {i}: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Document::text(rec.id, sentences).map_err(|e| e.to_string())
        }
        ("speech", None, Some(utterances)) => {
            let mut networks = Vec::with_capacity(utterances.len());
            for (u, slots) in utterances.into_iter().enumerate() {
                let slots = slots
                    .into_iter()
                    .map(|slot| {
                        slot.into_iter()
                            .map(|(tok, prob)| Ok(CnArc { token: Token::parse(&tok)?, prob }))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
                    .and_then(ConfusionNetwork::new)
                    .map_err(|e| format!("utterance {u}: {e}"))?;
                networks.push(slots);
            }
            Document::speech(rec.id, networks).map_err(|e| e.to_string())
        }
        ("text", _, _) => Err("text document needs `sentences` and no `utterances`".into()),
        ("speech", _, _) => Err("speech document needs `utterances` and no `sentences`".into()),
        (other, _, _) => Err(format!("unknown document kind {other:?}")),
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut corpus = Corpus::new();
    for (lineno, line) in read_lines(path)? {
        let rec: DocumentRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, lineno, format!("invalid document record: {e}")))?;
        let doc = record_to_document(rec).map_err(|m| Error::format(path, lineno, m))?;
        if corpus.contains(doc.id()) {
            return Err(Error::format(path, lineno, format!("duplicate document id {}", doc.id())));
        }
        corpus.insert(doc)?;
    }
    Ok(corpus)
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for doc in corpus.documents() {
        let rec = match doc.body() {
            DocumentBody::Text(sentences) => DocumentRecord {
                id: doc.id().to_string(),
                kind: "text".into(),
                sentences: Some(sentences.iter().map(Sentence::to_string).collect()),
                utterances: None,
            },
            DocumentBody::Speech(nets) => DocumentRecord {
                id: doc.id().to_string(),
                kind: "speech".into(),
                sentences: None,
                utterances: Some(
                    nets.iter()
                        .map(|cn| {
                            cn.slots()
                                .iter()
                                .map(|slot| {
                                    slot.iter().map(|a| (a.token.to_string(), a.prob)).collect()
                                })
                                .collect()
                        })
                        .collect(),
                ),
            },
        };
        let json = serde_json::to_string(&rec).expect("document records always serialize");
        writeln!(w, "{json}").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

/// Loads a translation table; its source tag is the file stem.
pub fn load_translation_table(path: impl AsRef<Path>) -> Result<TranslationTable> {
    let path = path.as_ref();
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".into());
    let mut table = TranslationTable::new(source);
    for (lineno, line) in read_lines(path)? {
        let parts = fields(path, lineno, &line, 3)?;
        let foreign = Token::parse(parts[0]).map_err(|e| Error::format(path, lineno, e.to_string()))?;
        let english = Token::parse(parts[1]).map_err(|e| Error::format(path, lineno, e.to_string()))?;
        let prob: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::format(path, lineno, format!("invalid probability {:?}", parts[2])))?;
        let row_key = foreign.clone();
        table
            .insert(foreign, english, prob)
            .map_err(|e| Error::format(path, lineno, e.to_string()))?;
        let sum: f64 = table.translations(row_key.as_str()).iter().map(|(_, p)| p).sum();
        if sum > 1.0 + TABLE_ROW_TOLERANCE {
            return Err(Error::format(
                path,
                lineno,
                format!("translations of {row_key} sum to {sum} > 1"),
            ));
        }
    }
    Ok(table)
}

pub fn write_translation_table(path: impl AsRef<Path>, table: &TranslationTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for (f, row) in table.entries() {
        for (e, p) in row {
            writeln!(w, "{f}\t{e}\t{p}").map_err(|err| Error::io(path, err))?;
        }
    }
    finish(path, w)
}

pub fn load_bitext(path: impl AsRef<Path>) -> Result<Bitext> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let parts = fields(path, lineno, &line, 2)?;
        let f = Sentence::parse(parts[0])
            .map_err(|e| Error::format(path, lineno, format!("foreign side: {e}")))?;
        let e = Sentence::parse(parts[1])
            .map_err(|e| Error::format(path, lineno, format!("english side: {e}")))?;
        pairs.push((f, e));
    }
    Bitext::new(pairs).map_err(|e| Error::format(path, 0, e.to_string()))
}

pub fn write_bitext(path: impl AsRef<Path>, bitext: &Bitext) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for (f, e) in bitext.pairs() {
        writeln!(w, "{f}\t{e}").map_err(|err| Error::io(path, err))?;
    }
    finish(path, w)
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let mut queries: Vec<Query> = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let q = parse_query_line(&line).map_err(|m| Error::format(path, lineno, m))?;
        if queries.iter().any(|other| other.id == q.id) {
            return Err(Error::format(path, lineno, format!("duplicate query id {}", q.id)));
        }
        queries.push(q);
    }
    Ok(queries)
}

pub fn write_queries(path: impl AsRef<Path>, queries: &[Query]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for q in queries {
        writeln!(w, "{}\t{}", q.id, q.query_string()).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

/// Loads judgments. Document references are checked against a corpus with
/// [`Judgments::validate_against`].
pub fn load_judgments(path: impl AsRef<Path>) -> Result<Judgments> {
    let path = path.as_ref();
    let mut judgments = Judgments::new();
    for (lineno, line) in read_lines(path)? {
        let parts = fields(path, lineno, &line, 2)?;
        let (q, d) = (parts[0].trim(), parts[1].trim());
        if q.is_empty() || d.is_empty() {
            return Err(Error::format(path, lineno, "empty query or document id"));
        }
        judgments.insert(q, d);
    }
    Ok(judgments)
}

pub fn write_judgments(path: impl AsRef<Path>, judgments: &Judgments) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for (q, d) in judgments.pairs() {
        writeln!(w, "{q}\t{d}").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}
