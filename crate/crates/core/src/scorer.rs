//! Query value and its mean over queries (mAQWV).
//!
//! For a query with `n_r` relevant documents in a corpus of `N`, a returned
//! set with `n_t` hits and `n_f` false alarms scores
//! `QV = 1 − (p_miss + β·p_fa)` with `p_miss = (n_r − n_t)/n_r` and
//! `p_fa = n_f/(N − n_r)`. mAQWV is the plain mean of QV over the queries
//! that have at least one relevant document; nothing else is "modified".

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use crate::corpus::io::{create, finish};
use crate::corpus::{Corpus, Judgments};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QueryScore {
    pub query_id: String,
    /// Relevant documents in the gold standard.
    pub n_r: usize,
    /// Returned documents that are relevant.
    pub n_t: usize,
    /// Returned documents that are not.
    pub n_f: usize,
    pub p_miss: f64,
    pub p_fa: f64,
    pub qv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunScore {
    /// Scored queries in ascending id order.
    pub queries: Vec<QueryScore>,
    pub maqwv: f64,
    pub n_q: usize,
    pub beta: f64,
    /// Queries skipped because their gold set is empty.
    pub excluded: Vec<String>,
}

/// Scores one returned set. Returns `Ok(None)` when `gold` is empty, since
/// the miss rate is then undefined.
pub fn score_query(
    query_id: &str,
    returned: &BTreeSet<String>,
    gold: &BTreeSet<String>,
    n: usize,
    beta: f64,
) -> Result<Option<QueryScore>> {
    if gold.is_empty() {
        return Ok(None);
    }
    if gold.len() >= n {
        return Err(Error::Degenerate(format!(
            "query {query_id}: every one of the {n} documents is relevant, false-alarm rate undefined"
        )));
    }
    if returned.len() > n {
        return Err(Error::Invariant(format!(
            "query {query_id}: {} documents returned from a corpus of {n}",
            returned.len()
        )));
    }
    let n_r = gold.len();
    let n_t = returned.intersection(gold).count();
    let n_f = returned.len() - n_t;
    let p_miss = (n_r - n_t) as f64 / n_r as f64;
    let p_fa = n_f as f64 / (n - n_r) as f64;
    Ok(Some(QueryScore {
        query_id: query_id.to_string(),
        n_r,
        n_t,
        n_f,
        p_miss,
        p_fa,
        qv: 1.0 - (p_miss + beta * p_fa),
    }))
}

/// Scores every query of `returned`. Each returned document must belong to
/// `corpus`; queries absent from `judgments` have an empty gold set and are
/// excluded with a warning.
pub fn score_run(
    returned: &BTreeMap<String, BTreeSet<String>>,
    judgments: &Judgments,
    corpus: &Corpus,
    beta: f64,
) -> Result<RunScore> {
    let n = corpus.len();
    let mut queries = Vec::new();
    let mut excluded = Vec::new();
    for (qid, docs) in returned {
        if let Some(d) = docs.iter().find(|d| !corpus.contains(d)) {
            return Err(Error::Invariant(format!("query {qid} returned unknown document {d}")));
        }
        let gold = judgments.relevant(qid);
        match score_query(qid, docs, &gold, n, beta)? {
            Some(s) => queries.push(s),
            None => {
                log::warn!("query {qid} has no relevant documents and is not scored");
                excluded.push(qid.clone());
            }
        }
    }
    if queries.is_empty() {
        return Err(Error::Degenerate("no query has a non-empty gold set".into()));
    }
    let n_q = queries.len();
    let maqwv = queries.iter().map(|s| s.qv).sum::<f64>() / n_q as f64;
    Ok(RunScore { queries, maqwv, n_q, beta, excluded })
}

impl RunScore {
    /// `mAQWV=<v> beta=<v> n_q=<n>`
    pub fn summary(&self) -> String {
        format!("mAQWV={:?} beta={:?} n_q={}", self.maqwv, self.beta, self.n_q)
    }

    /// Per-query TSV with a header row, followed by the summary line.
    pub fn write_report(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "query-id\tn_r\tn_t\tn_f\tp_miss\tp_fa\tqv").map_err(io)?;
        for s in &self.queries {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{:?}\t{:?}\t{:?}",
                s.query_id, s.n_r, s.n_t, s.n_f, s.p_miss, s.p_fa, s.qv
            )
            .map_err(io)?;
        }
        writeln!(w, "{}", self.summary()).map_err(io)?;
        finish(path, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Sentence};

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn ids(range: std::ops::Range<usize>) -> BTreeSet<String> {
        range.map(|i| format!("d{i:03}")).collect()
    }

    #[test]
    fn worked_example() {
        let gold = ids(0..4);
        let mut returned = ids(1..4);
        returned.extend(ids(50..52));
        let s = score_query("q", &returned, &gold, 100, 40.0).unwrap().unwrap();
        assert_eq!((s.n_r, s.n_t, s.n_f), (4, 3, 2));
        assert_eq!(s.p_miss, 0.25);
        assert!((s.p_fa - 2.0 / 96.0).abs() < 1e-15);
        assert!((s.qv - (-1.0 / 12.0)).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_empty_returns() {
        let gold = set(&["a", "b"]);
        assert_eq!(score_query("q", &gold, &gold, 10, 40.0).unwrap().unwrap().qv, 1.0);
        assert_eq!(score_query("q", &set(&[]), &gold, 10, 40.0).unwrap().unwrap().qv, 0.0);
    }

    #[test]
    fn undefined_rates() {
        assert_eq!(score_query("q", &set(&["a"]), &set(&[]), 10, 40.0).unwrap(), None);
        let all = set(&["a", "b"]);
        assert!(matches!(score_query("q", &all, &all, 2, 40.0), Err(Error::Degenerate(_))));
    }

    fn corpus(n: usize) -> Corpus {
        Corpus::from_documents(
            ids(0..n).into_iter().map(|id| Document::text(id, vec![Sentence::parse("x").unwrap()]).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn run_mean_and_exclusions() {
        let c = corpus(12);
        let mut j = Judgments::default();
        for d in ["d000", "d001"] {
            j.insert("q1", d);
        }
        j.insert("q2", "d002");
        let mut returned = BTreeMap::new();
        returned.insert("q1".to_string(), set(&["d000"]));
        returned.insert("q2".to_string(), set(&["d002", "d005"]));
        returned.insert("q3".to_string(), set(&["d007"]));
        let run = score_run(&returned, &j, &c, 2.0).unwrap();
        assert_eq!(run.n_q, 2);
        assert_eq!(run.excluded, ["q3"]);
        // q1: 1 − 0.5 = 0.5; q2: 1 − 2/11
        let expect = (0.5 + (1.0 - 2.0 / 11.0)) / 2.0;
        assert!((run.maqwv - expect).abs() < 1e-15);

        let none: BTreeMap<_, _> = returned.keys().map(|q| (q.clone(), BTreeSet::new())).collect();
        assert_eq!(score_run(&none, &j, &c, 40.0).unwrap().maqwv, 0.0);

        let only_q3: BTreeMap<_, _> = returned.iter().filter(|(q, _)| *q == "q3").map(|(q, d)| (q.clone(), d.clone())).collect();
        assert!(score_run(&only_q3, &j, &c, 40.0).is_err());

        let mut bad = returned.clone();
        bad.insert("q1".into(), set(&["nope"]));
        assert!(matches!(score_run(&bad, &j, &c, 40.0), Err(Error::Invariant(_))));
    }

    #[test]
    fn report_format() {
        let c = corpus(4);
        let mut j = Judgments::default();
        j.insert("q", "d000");
        let mut returned = BTreeMap::new();
        returned.insert("q".to_string(), set(&["d000"]));
        let run = score_run(&returned, &j, &c, 40.0).unwrap();
        assert_eq!(run.summary(), "mAQWV=1.0 beta=40.0 n_q=1");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.tsv");
        run.write_report(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "query-id\tn_r\tn_t\tn_f\tp_miss\tp_fa\tqv");
        assert_eq!(lines[1], "q\t1\t1\t0\t0.0\t0.0\t1.0");
        assert_eq!(lines[2], "mAQWV=1.0 beta=40.0 n_q=1");
    }
}
