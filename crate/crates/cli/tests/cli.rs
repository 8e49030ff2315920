use std::fs;
use std::path::Path;

use clir::combiner::MixtureWeights;
use clir::synth::files;
use clir_cli::{outputs, run};

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn clir(args: &[&str]) -> String {
    run(std::iter::once("clir").chain(args.iter().copied())).unwrap_or_else(|e| panic!("clir {args:?}: {e}"))
}

fn exit_code(args: &[&str]) -> i32 {
    match run(std::iter::once("clir").chain(args.iter().copied())) {
        Ok(_) => 0,
        Err(e) => e.exit_code(),
    }
}

fn synth(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["synth", "--out", s(dir), "--docs", "40", "--queries", "6", "--bitext-pairs", "100",
        "--heldout-pairs", "100"];
    args.extend(extra);
    clir(&args)
}

fn retrieve(data: &Path, out: &Path, extra: &[&str]) -> String {
    let (corpus, queries, table) = (data.join(files::CORPUS), data.join(files::QUERIES), data.join(files::table(1)));
    let mut args = vec!["retrieve", "--corpus", s(&corpus), "--queries", s(&queries), "--table", s(&table), "--out", s(out)];
    args.extend(extra);
    clir(&args)
}

fn evaluate(data: &Path, returned: &Path) -> String {
    clir(&[
        "evaluate",
        "--corpus", s(&data.join(files::CORPUS)),
        "--queries", s(&data.join(files::QUERIES)),
        "--judgments", s(&data.join(files::JUDGMENTS)),
        "--returned", s(returned),
    ])
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let corpus = data.join(files::CORPUS);
    let queries = data.join(files::QUERIES);
    let out = tmp.path().join("out");

    assert_eq!(exit_code(&["--help"]), 0);
    assert_eq!(exit_code(&["retrieve", "--no-such-flag"]), 1);
    assert_eq!(exit_code(&["retrieve", "--corpus", s(&corpus), "--queries", s(&queries), "--out", s(&out)]), 1);
    assert_eq!(exit_code(&["--jobs", "0", "synth", "--out", s(&out)]), 1);
    assert_eq!(exit_code(&["synth", "--out", s(&out), "--noise", "1.5"]), 1);

    let broken = tmp.path().join("broken.jsonl");
    fs::write(&broken, "{not json\n").unwrap();
    let table = data.join(files::table(1));
    assert_eq!(
        exit_code(&["retrieve", "--corpus", s(&broken), "--queries", s(&queries), "--table", s(&table), "--out", s(&out)]),
        2
    );
    let missing = tmp.path().join("missing.tsv");
    assert_eq!(
        exit_code(&["retrieve", "--corpus", s(&corpus), "--queries", s(&missing), "--table", s(&table), "--out", s(&out)]),
        2
    );
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.conf");
    fs::write(&config, "# synthetic run\ndocs = 30\nqueries = 4\nbitext_pairs = 50\nheldout-pairs = 50\nbeta = 10\n")
        .unwrap();
    let out = tmp.path().join("a");
    let from_file = clir(&["--config", s(&config), "synth", "--out", s(&out)]);
    assert!(from_file.contains("docs=30 ") && from_file.contains("queries=4 "), "{from_file}");
    let overridden = clir(&["--config", s(&config), "synth", "--out", s(&out), "--docs", "35"]);
    assert!(overridden.contains("docs=35 ") && overridden.contains("queries=4 "), "{overridden}");
    let defaults = clir(&["synth", "--out", s(&out), "--bitext-pairs", "10", "--heldout-pairs", "10"]);
    assert!(defaults.contains("docs=200 ") && defaults.contains("queries=20 "), "{defaults}");

    fs::write(&config, "no_such_key = 1\n").unwrap();
    assert_eq!(exit_code(&["--config", s(&config), "synth", "--out", s(&out)]), 1);
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, &["--noise", "0.3"]);
    synth(&b, &["--noise", "0.3"]);
    for f in [files::CORPUS, files::QUERIES, files::JUDGMENTS, files::BITEXT, files::HYPOTHESES] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let heldout = a.join(files::HELDOUT);
    let second = a.join(files::table(2));
    let extra = ["--table", s(&second), "--weights", "fit", "--heldout", s(&heldout)];
    let (ra, rb) = (tmp.path().join("ra"), tmp.path().join("rb"));
    retrieve(&a, &ra, &extra);
    let mut parallel = vec!["--jobs", "4"];
    parallel.extend(extra);
    retrieve(&a, &rb, &parallel);
    for f in [outputs::RUN, outputs::CUTOFFS, outputs::RETURNED, outputs::WEIGHTS] {
        assert_eq!(fs::read(ra.join(f)).unwrap(), fs::read(rb.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn perfect_returned_sets_score_one() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let summary = evaluate(&data, &data.join(files::JUDGMENTS));
    assert!(summary.ends_with("mAQWV=1.0"), "{summary}");
}

#[test]
fn identical_generators_get_uniform_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let copy = tmp.path().join("twin.tsv");
    fs::copy(data.join(files::table(1)), &copy).unwrap();
    let out = tmp.path().join("weights.tsv");
    clir(&[
        "fit-mixture",
        "--table", s(&data.join(files::table(1))),
        "--table", s(&copy),
        "--heldout", s(&data.join(files::HELDOUT)),
        "--out", s(&out),
    ]);
    let w = MixtureWeights::load(&out).unwrap();
    let values: Vec<f64> = w.iter().map(|(_, v)| v).collect();
    assert_eq!(values.len(), 2);
    assert!(values.iter().all(|v| (v - 0.5).abs() < 1e-12), "{values:?}");
}

#[test]
fn default_synth_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let made = clir(&["synth", "--out", s(&data)]);
    assert!(made.contains("docs=200 "), "{made}");
    let model = tmp.path().join("mt.json");
    clir(&[
        "fit-ensemble",
        "--heldout", s(&data.join(files::HELDOUT)),
        "--heldout-hyps", s(&data.join(files::HELDOUT_HYPOTHESES)),
        "--out", s(&model),
    ]);
    let out = tmp.path().join("run");
    let hyps = data.join(files::HYPOTHESES);
    let heldout = data.join(files::HELDOUT);
    let heldout_hyps = data.join(files::HELDOUT_HYPOTHESES);
    let summary = retrieve(&data, &out, &[
        "--mt-model", s(&model), "--hyps", s(&hyps),
        "--weights", "fit", "--heldout", s(&heldout), "--heldout-hyps", s(&heldout_hyps),
    ]);
    assert!(summary.contains("queries=20 "), "{summary}");
    let run = fs::read_to_string(out.join(outputs::RUN)).unwrap();
    assert_eq!(run.lines().count(), 20 * 200);

    let score = evaluate(&data, &out.join(outputs::RETURNED));
    let maqwv: f64 = score.rsplit("mAQWV=").next().unwrap().parse().unwrap();
    assert!(maqwv > 0.5 && maqwv <= 1.0, "{score}");
}
