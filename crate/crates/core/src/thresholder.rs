//! Expected-query-value cutoff selection.
//!
//! Given calibrated probabilities `p_1 ≥ … ≥ p_N`, returning the top `k`
//! documents has expected misses `E_miss(k) = Σ_{i>k} p_i` and expected false
//! alarms `E_fa(k) = Σ_{i≤k} (1 − p_i)`. With `E_rel = Σ p_i` scaled by γ into
//! `E'`, the expected query value is
//!
//! ```text
//! E_QV(k) = 1 − ( E_miss(k) / E'  +  β · E_fa(k) / (N − E') )
//! ```
//!
//! and the smallest maximizing `k` is chosen.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use crate::corpus::io::{create, fields, finish, read_lines};
use crate::relevance::RankedList;
use crate::{Error, Result, DEFAULT_BETA, DEFAULT_EPSILON, DEFAULT_GAMMA};

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    /// Cost of a false alarm relative to a miss.
    pub beta: f64,
    /// Scaling applied to the expected number of relevant documents.
    pub gamma: f64,
    /// `γ·E_rel` is clamped into `[epsilon, N − epsilon]`.
    pub epsilon: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl ThresholdConfig {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be at least 1, got {gamma}")));
        }
        Ok(ThresholdConfig { beta, gamma, ..Default::default() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffDecision {
    pub query_id: String,
    /// Number of top-ranked documents to return.
    pub k: usize,
    pub expected_qv: f64,
    /// `E_miss(k)` for `k = 0..=N`.
    pub e_miss: Vec<f64>,
    /// `E_fa(k)` for `k = 0..=N`.
    pub e_fa: Vec<f64>,
    /// Unscaled `Σ p_i`.
    pub e_rel: f64,
    /// `E_QV(k)` for `k = 0..=N`.
    pub curve: Vec<f64>,
}

impl CutoffDecision {
    /// The returned set: the top-`k` prefix of `list`.
    pub fn returned<'a>(&self, list: &'a RankedList) -> Vec<&'a str> {
        list.top(self.k).collect()
    }
}

/// Evaluates `E_QV(k)` for every cutoff and picks the smallest argmax.
pub fn decide(list: &RankedList, config: &ThresholdConfig) -> Result<CutoffDecision> {
    let probs = list.probabilities();
    let n = probs.len();
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    if probs.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Invariant(format!("ranked list {} is not sorted", list.query_id)));
    }

    let mut e_miss = vec![0.0; n + 1];
    for k in (0..n).rev() {
        e_miss[k] = e_miss[k + 1] + probs[k];
    }
    let mut e_fa = vec![0.0; n + 1];
    for k in 1..=n {
        e_fa[k] = e_fa[k - 1] + (1.0 - probs[k - 1]);
    }
    let e_rel = e_miss[0];

    let big_n = n as f64;
    let eps = config.epsilon;
    let scaled = (config.gamma * e_rel).clamp(eps, big_n - eps);
    let curve: Vec<f64> = (0..=n)
        .map(|k| 1.0 - (e_miss[k] / scaled + config.beta * e_fa[k] / (big_n - scaled)))
        .collect();

    // values equal up to rounding count as ties, resolved toward smaller k
    let best = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * best.abs().max(1.0);
    let k = curve.iter().position(|&v| v >= best - tol).unwrap_or(0);
    Ok(CutoffDecision {
        query_id: list.query_id.clone(),
        k,
        expected_qv: curve[k],
        e_miss,
        e_fa,
        e_rel,
        curve,
    })
}

/// `(k, E_QV(k))` for `k = 0..=N`.
pub fn expected_qv_curve(list: &RankedList, config: &ThresholdConfig) -> Result<Vec<(usize, f64)>> {
    Ok(decide(list, config)?.curve.into_iter().enumerate().collect())
}

/// Cutoff file lines `query-id\tk\texpected_qv`.
pub fn write_cutoffs(path: impl AsRef<Path>, decisions: &[CutoffDecision]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for d in decisions {
        writeln!(w, "{}\t{}\t{}", d.query_id, d.k, d.expected_qv).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

/// Returned-set file lines `query-id\tdoc-id`.
pub fn write_returned(path: impl AsRef<Path>, decisions: &[(CutoffDecision, RankedList)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for (d, list) in decisions {
        for doc in d.returned(list) {
            writeln!(w, "{}\t{doc}", d.query_id).map_err(|e| Error::io(path, e))?;
        }
    }
    finish(path, w)
}

/// Reads a returned-set file into query id → returned document ids.
pub fn load_returned(path: impl AsRef<Path>) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let path = path.as_ref();
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (lineno, line) in read_lines(path)? {
        let f = fields(path, lineno, &line, 2)?;
        if !out.entry(f[0].to_string()).or_default().insert(f[1].to_string()) {
            return Err(Error::format(path, lineno, format!("document {} returned twice", f[1])));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(probs: &[f64]) -> RankedList {
        RankedList::new(
            "q",
            probs.iter().enumerate().map(|(i, &p)| (format!("d{i:02}"), p)).collect(),
        )
        .unwrap()
    }

    fn cfg(beta: f64, gamma: f64) -> ThresholdConfig {
        ThresholdConfig::new(beta, gamma).unwrap()
    }

    #[test]
    fn worked_example() {
        let d = decide(&list(&[0.9, 0.6, 0.1]), &cfg(2.0, 1.0)).unwrap();
        assert!((d.e_rel - 1.6).abs() < 1e-12);
        let expect = [0.0, 0.419_642_857_142_857_2, 0.223_214_285_714_285_7, -1.0];
        for (got, want) in d.curve.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(d.k, 1);
        let curve = expected_qv_curve(&list(&[0.9, 0.6, 0.1]), &cfg(2.0, 1.0)).unwrap();
        assert_eq!(curve.len(), 4);
        assert_eq!(curve[1].0, 1);
    }

    #[test]
    fn floor_probabilities_return_nothing() {
        for beta in [1.0, 2.0, 40.0] {
            for gamma in [1.0, 1.3] {
                let d = decide(&list(&[1e-6; 8]), &cfg(beta, gamma)).unwrap();
                assert_eq!(d.k, 0);
            }
        }
    }

    #[test]
    fn confident_head_is_returned() {
        let mut probs = vec![0.99, 0.99];
        probs.extend([0.01; 8]);
        let d = decide(&list(&probs), &cfg(2.0, 1.0)).unwrap();
        assert_eq!(d.k, 2);
        assert_eq!(d.returned(&list(&probs)), ["d00", "d01"]);
    }

    #[test]
    fn single_document_tie_prefers_empty_set() {
        let d = decide(&list(&[0.5]), &cfg(1.0, 1.0)).unwrap();
        assert_eq!(d.curve, vec![0.0, 0.0]);
        assert_eq!(d.k, 0);
    }

    #[test]
    fn recursion_invariants() {
        let probs = [0.97, 0.8, 0.55, 0.3, 0.3, 0.01];
        let d = decide(&list(&probs), &cfg(3.0, 1.3)).unwrap();
        let n = probs.len();
        assert_eq!(d.e_miss[n], 0.0);
        assert_eq!(d.e_fa[0], 0.0);
        assert_eq!(d.e_miss[0], d.e_rel);
        assert!((d.e_fa[n] - (n as f64 - d.e_rel)).abs() < 1e-12);
        assert!(d.e_miss.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.e_fa.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn returned_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("returned.tsv");
        let l = list(&[0.99, 0.99, 0.01, 0.01]);
        let d = decide(&l, &cfg(2.0, 1.0)).unwrap();
        write_returned(&path, &[(d, l)]).unwrap();
        let back = load_returned(&path).unwrap();
        assert_eq!(back["q"], ["d00", "d01"].into_iter().map(String::from).collect());
    }

    #[test]
    fn config_validation() {
        assert!(ThresholdConfig::new(0.0, 1.0).is_err());
        assert!(ThresholdConfig::new(1.0, 0.9).is_err());
        assert_eq!(ThresholdConfig::default().beta, 40.0);
        assert_eq!(ThresholdConfig::default().gamma, 1.3);
    }
}
