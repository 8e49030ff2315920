use std::collections::{BTreeMap, BTreeSet};

use clir::evidence::{build_query_evidence, Generator};
use clir::relevance::rank;
use clir::scorer::score_run;
use clir::synth::{generate, judgments_are_exact, SynthSpec};
use clir::thresholder::{decide, ThresholdConfig};
use clir::DEFAULT_EPSILON;

fn small(seed: u64) -> SynthSpec {
    SynthSpec { seed, docs: 120, queries: 10, bitext_pairs: 50, heldout_pairs: 50, ..SynthSpec::default() }
}

#[test]
fn noiseless_tables_retrieve_exactly_the_planted_documents() {
    let data = generate(&SynthSpec { noise: 0.0, ..small(5) }).unwrap();
    assert!(judgments_are_exact(&data));
    let ev = build_query_evidence(Generator::Table(&data.tables[0]), &data.corpus, &data.queries, DEFAULT_EPSILON)
        .unwrap();
    let cfg = ThresholdConfig::default();
    let mut returned = BTreeMap::new();
    for q in &data.queries {
        let list = rank(&ev, &data.corpus, q).unwrap();
        let d = decide(&list, &cfg).unwrap();
        let set: BTreeSet<String> = d.returned(&list).into_iter().map(str::to_string).collect();
        returned.insert(q.id.clone(), set);
    }
    let score = score_run(&returned, &data.judgments, &data.corpus, cfg.beta).unwrap();
    assert_eq!(score.maqwv, 1.0, "{score:?}");
}

#[test]
fn degenerate_speech_gives_the_same_evidence_as_text() {
    let base = SynthSpec { noise: 0.0, confusion_depth: 1, ..small(3) };
    let text = generate(&SynthSpec { speech_fraction: 0.0, ..base.clone() }).unwrap();
    let speech = generate(&SynthSpec { speech_fraction: 1.0, ..base }).unwrap();
    assert_eq!(speech.summary().speech_docs, speech.corpus.len());
    assert_eq!(text.queries, speech.queries);
    for (a, b) in text.tables.iter().zip(&speech.tables) {
        let ea = build_query_evidence(Generator::Table(a), &text.corpus, &text.queries, DEFAULT_EPSILON).unwrap();
        let eb = build_query_evidence(Generator::Table(b), &speech.corpus, &speech.queries, DEFAULT_EPSILON).unwrap();
        assert!(!ea.is_empty());
        assert_eq!(ea, eb);
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    assert_eq!(generate(&small(9)).unwrap(), generate(&small(9)).unwrap());
    assert_ne!(generate(&small(9)).unwrap().corpus, generate(&small(10)).unwrap().corpus);
}
