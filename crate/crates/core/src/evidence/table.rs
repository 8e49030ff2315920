use std::collections::BTreeMap;

use crate::corpus::{ConfusionNetwork, Sentence, Token, TranslationTable};

fn keep_max(out: &mut BTreeMap<Token, f64>, word: &Token, p: f64) {
    match out.get_mut(word) {
        Some(v) => {
            if p > *v {
                *v = p;
            }
        }
        None => {
            out.insert(word.clone(), p);
        }
    }
}

/// `p_tt(rel | s, e) = max_{f ∈ s} p(e | f)` for every English word
/// reachable from `s`; unreachable words are absent.
pub fn tt_evidence(table: &TranslationTable, sentence: &Sentence) -> BTreeMap<Token, f64> {
    let mut out = BTreeMap::new();
    for f in sentence.tokens() {
        for (e, p) in table.translations(f.as_str()) {
            keep_max(&mut out, e, *p);
        }
    }
    out
}

/// Speech variant of [`tt_evidence`]: every arc `(f, p(f))` of every slot
/// contributes `p(e | f) · p(f)`, and the maximum is kept.
pub fn cn_evidence(table: &TranslationTable, network: &ConfusionNetwork) -> BTreeMap<Token, f64> {
    let mut out = BTreeMap::new();
    for arc in network.arcs() {
        for (e, p) in table.translations(arc.token.as_str()) {
            keep_max(&mut out, e, p * arc.prob);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CnArc;
    use proptest::prelude::*;

    fn tok(s: &str) -> Token {
        Token::new(s).unwrap()
    }

    // Row sums are not validated here: the f2 row of the worked example sums
    // to 1.3, which a loaded table would reject.
    fn table(entries: &[(&str, &str, f64)]) -> TranslationTable {
        let mut t = TranslationTable::new("t");
        for &(f, e, p) in entries {
            t.insert(tok(f), tok(e), p).unwrap();
        }
        t
    }

    fn sentence(s: &str) -> Sentence {
        Sentence::parse(s).unwrap()
    }

    #[test]
    fn max_over_foreign_tokens() {
        let t = table(&[("f1", "e1", 0.6), ("f2", "e1", 0.4), ("f2", "e2", 0.9)]);
        let ev = tt_evidence(&t, &sentence("f1 f2"));
        assert_eq!(ev.len(), 2);
        assert_eq!(ev["e1"], 0.6);
        assert_eq!(ev["e2"], 0.9);
    }

    #[test]
    fn no_coverage_and_repetition() {
        let t = table(&[("f1", "e1", 0.6)]);
        assert!(tt_evidence(&t, &sentence("x y")).is_empty());
        assert_eq!(tt_evidence(&t, &sentence("f1 f1")), tt_evidence(&t, &sentence("f1")));
    }

    #[test]
    fn confusion_network_weights_arcs() {
        let t = table(&[("f1", "e1", 0.6), ("f2", "e1", 0.9)]);
        let cn = ConfusionNetwork::new(vec![vec![
            CnArc { token: tok("f1"), prob: 0.5 },
            CnArc { token: tok("f2"), prob: 0.1 },
        ]])
        .unwrap();
        let ev = cn_evidence(&t, &cn);
        assert_eq!(ev.len(), 1);
        assert!((ev["e1"] - 0.30).abs() < 1e-15);

        let miss = ConfusionNetwork::new(vec![vec![CnArc { token: tok("zz"), prob: 0.5 }]]).unwrap();
        assert!(cn_evidence(&t, &miss).is_empty());
    }

    fn arb_table() -> impl Strategy<Value = Vec<(u8, u8, f64)>> {
        prop::collection::vec((0u8..6, 0u8..6, 0.01f64..0.3), 0..12)
    }

    fn build(entries: &[(u8, u8, f64)]) -> TranslationTable {
        let mut t = TranslationTable::new("t");
        for &(f, e, p) in entries {
            // duplicates are skipped; the row sum stays below 1 by range
            let _ = t.insert(tok(&format!("f{f}")), tok(&format!("e{e}")), p);
        }
        t
    }

    proptest! {
        #[test]
        fn unit_arcs_reduce_to_text(entries in arb_table(), words in prop::collection::vec(0u8..8, 1..6)) {
            let t = build(&entries);
            let tokens: Vec<Token> = words.iter().map(|w| tok(&format!("f{w}"))).collect();
            let s = Sentence::new(tokens.clone()).unwrap();
            let cn = ConfusionNetwork::new(
                tokens.into_iter().map(|token| vec![CnArc { token, prob: 1.0 }]).collect(),
            ).unwrap();
            prop_assert_eq!(tt_evidence(&t, &s), cn_evidence(&t, &cn));
        }

        #[test]
        fn adding_an_entry_never_lowers_evidence(
            entries in arb_table(),
            extra in (0u8..6, 0u8..6, 0.01f64..0.3),
            words in prop::collection::vec(0u8..8, 1..6),
        ) {
            let before = build(&entries);
            let mut grown = entries.clone();
            grown.push(extra);
            let after = build(&grown);
            let s = Sentence::new(words.iter().map(|w| tok(&format!("f{w}"))).collect()).unwrap();
            let cn = ConfusionNetwork::new(
                words.iter().map(|w| vec![CnArc { token: tok(&format!("f{w}")), prob: 0.7 }]).collect(),
            ).unwrap();
            let (b, a) = (tt_evidence(&before, &s), tt_evidence(&after, &s));
            for (w, p) in &b {
                prop_assert!(a[w] >= *p);
            }
            let (b, a) = (cn_evidence(&before, &cn), cn_evidence(&after, &cn));
            for (w, p) in &b {
                prop_assert!(a[w] >= *p);
            }
        }
    }
}
