//! The `clir` command line: synthesis, model fitting, retrieval and scoring.
//!
//! [`run`] parses arguments, executes one subcommand and returns its
//! one-line summary. Values may also come from a flat `key = value` file
//! given with `--config`; keys are long flag names, and a flag given on the
//! command line wins over the file.

mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use clir::combiner::{combine, fit_mixture, MixtureConfig, MixtureWeights};
use clir::corpus::{load_bitext, load_corpus, load_judgments, load_queries, load_translation_table, Bitext, Corpus,
    Query, QueryKind, Token, TranslationTable, BITEXT_DOC_ID};
use clir::evidence::{build_evidence, fit_mt_ensemble, query_words, train_searcher, EnsembleConfig, EvidenceMatrix,
    Generator, MtEnsembleModel, MtHypothesisSet, SearcherConfig, SearcherModel, Vocabulary};
use clir::relevance::{rank, write_run, RankedList};
use clir::scorer::score_run;
use clir::synth::{generate, SynthSpec};
use clir::thresholder::{decide, load_returned, write_cutoffs, write_returned, ThresholdConfig};
use clir::{DEFAULT_BETA, DEFAULT_EPSILON, DEFAULT_GAMMA};

/// Output file names written by `retrieve`.
pub mod outputs {
    pub const RUN: &str = "run.txt";
    pub const CUTOFFS: &str = "cutoffs.tsv";
    pub const RETURNED: &str = "returned.tsv";
    pub const WEIGHTS: &str = "weights.tsv";
}

#[derive(Debug, Parser)]
#[command(name = "clir", version, about = "Cross-lingual retrieval with expected-value cutoffs")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Train the embedding scorer on bitext.
    TrainSearcher(TrainSearcherArgs),
    /// Fit the logistic MT-system ensemble on held-out bitext.
    FitEnsemble(FitEnsembleArgs),
    /// Fit evidence mixture weights on held-out bitext.
    FitMixture(FitMixtureArgs),
    /// Write the (combined) evidence matrix for a corpus and query set.
    DumpEvidence(DumpEvidenceArgs),
    /// Rank documents, choose cutoffs and write the returned sets.
    Retrieve(RetrieveArgs),
    /// Score returned sets against judgments.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub foreign_vocab: Option<usize>,
    #[arg(long)]
    pub english_vocab: Option<usize>,
    /// Dictionary noise rate; also the confusion mass off the true token.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long)]
    pub min_sentences: Option<usize>,
    #[arg(long)]
    pub max_sentences: Option<usize>,
    #[arg(long)]
    pub min_sentence_len: Option<usize>,
    #[arg(long)]
    pub max_sentence_len: Option<usize>,
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub min_phrases: Option<usize>,
    #[arg(long)]
    pub max_phrases: Option<usize>,
    #[arg(long)]
    pub min_phrase_len: Option<usize>,
    #[arg(long)]
    pub max_phrase_len: Option<usize>,
    #[arg(long)]
    pub speech_fraction: Option<f64>,
    #[arg(long)]
    pub confusion_depth: Option<usize>,
    #[arg(long)]
    pub planting_rate: Option<f64>,
    #[arg(long)]
    pub distractor_rate: Option<f64>,
    #[arg(long)]
    pub bitext_pairs: Option<usize>,
    #[arg(long)]
    pub heldout_pairs: Option<usize>,
    /// Comma-separated word-error rates, one MT system each.
    #[arg(long, value_delimiter = ',')]
    pub mt_wer: Vec<f64>,
    /// Number of aligner tables.
    #[arg(long)]
    pub tables: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainSearcherArgs {
    #[arg(long)]
    pub bitext: PathBuf,
    /// Model output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep at most this many English words, most frequent first.
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Self-attention layers.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Vocabularies up to this size use every non-target word as a negative.
    #[arg(long)]
    pub full_vocab_threshold: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitEnsembleArgs {
    /// Held-out bitext.
    #[arg(long)]
    pub heldout: PathBuf,
    /// MT output for the held-out bitext.
    #[arg(long)]
    pub heldout_hyps: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

/// Evidence sources; at least one must be given.
#[derive(Debug, Args, Clone, Default)]
pub struct GeneratorArgs {
    /// Translation table, repeatable or comma-separated; named by file stem.
    #[arg(long = "table", value_delimiter = ',')]
    pub tables: Vec<PathBuf>,
    /// MT ensemble model.
    #[arg(long)]
    pub mt_model: Option<PathBuf>,
    /// Searcher model.
    #[arg(long)]
    pub searcher: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitMixtureArgs {
    #[command(flatten)]
    pub generators: GeneratorArgs,
    #[arg(long)]
    pub heldout: PathBuf,
    /// MT output for the held-out bitext; required with --mt-model.
    #[arg(long)]
    pub heldout_hyps: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct DumpEvidenceArgs {
    #[command(flatten)]
    pub generators: GeneratorArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Queries whose words are scored.
    #[arg(long)]
    pub queries: PathBuf,
    /// MT output for the corpus; required with --mt-model.
    #[arg(long)]
    pub hyps: Option<PathBuf>,
    /// Mixture weights for several generators (uniform when omitted).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub generators: GeneratorArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    /// MT output for the corpus; required with --mt-model.
    #[arg(long)]
    pub hyps: Option<PathBuf>,
    /// Mixture weights file, or `fit` to estimate them on --heldout.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    #[arg(long)]
    pub heldout_hyps: Option<PathBuf>,
    /// False-alarm cost relative to a miss.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Scaling of the expected number of relevant documents.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value = "clir")]
    pub run_tag: String,
    /// Output directory for the run, cutoff and returned-set files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub judgments: PathBuf,
    /// Returned-set file written by `retrieve`.
    #[arg(long)]
    pub returned: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Per-query score report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Argument parsing failed, or help/version was requested.
    Clap(clap::Error),
    Usage(String),
    Data(clir::Error),
}

impl CliError {
    /// 0 for help/version, 1 for usage and configuration errors, 2 for data
    /// and invariant errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) | CliError::Data(clir::Error::Config(_)) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<clir::Error> for CliError {
    fn from(e: clir::Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(message: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(message.into()))
}

/// Runs the command line (program name first) and returns the summary line.
pub fn run<I, T>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args).map_err(CliError::Clap)?;
    let cli = match &cli.config {
        Some(path) => {
            let extra = config::arguments_from_file(path, &cli, &args)?;
            Cli::try_parse_from(args.iter().cloned().chain(extra)).map_err(CliError::Clap)?
        }
        None => cli,
    };
    match cli.jobs {
        Some(0) => usage("--jobs must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(|| execute(&cli)),
        None => execute(&cli),
    }
}

/// Runs [`run`], prints its outcome and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run(args) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            CliError::Clap(e).exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

impl Command {
    /// The subcommand as typed on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::TrainSearcher(_) => "train-searcher",
            Command::FitEnsemble(_) => "fit-ensemble",
            Command::FitMixture(_) => "fit-mixture",
            Command::DumpEvidence(_) => "dump-evidence",
            Command::Retrieve(_) => "retrieve",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, cli.seed),
        Command::TrainSearcher(a) => cmd_train_searcher(a, cli.seed),
        Command::FitEnsemble(a) => cmd_fit_ensemble(a, cli.seed),
        Command::FitMixture(a) => cmd_fit_mixture(a, cli.seed),
        Command::DumpEvidence(a) => cmd_dump_evidence(a),
        Command::Retrieve(a) => cmd_retrieve(a, cli.seed),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

fn cmd_synth(a: &SynthArgs, seed: u64) -> CliResult<String> {
    let d = SynthSpec::default();
    let spec = SynthSpec {
        seed,
        foreign_vocab: a.foreign_vocab.unwrap_or(d.foreign_vocab),
        english_vocab: a.english_vocab.unwrap_or(d.english_vocab),
        noise: a.noise.unwrap_or(d.noise),
        docs: a.docs.unwrap_or(d.docs),
        sentences_per_doc: (
            a.min_sentences.unwrap_or(d.sentences_per_doc.0),
            a.max_sentences.unwrap_or(d.sentences_per_doc.1),
        ),
        sentence_len: (
            a.min_sentence_len.unwrap_or(d.sentence_len.0),
            a.max_sentence_len.unwrap_or(d.sentence_len.1),
        ),
        queries: a.queries.unwrap_or(d.queries),
        phrases_per_query: (
            a.min_phrases.unwrap_or(d.phrases_per_query.0),
            a.max_phrases.unwrap_or(d.phrases_per_query.1),
        ),
        phrase_len: (
            a.min_phrase_len.unwrap_or(d.phrase_len.0),
            a.max_phrase_len.unwrap_or(d.phrase_len.1),
        ),
        speech_fraction: a.speech_fraction.unwrap_or(d.speech_fraction),
        confusion_depth: a.confusion_depth.unwrap_or(d.confusion_depth),
        planting_rate: a.planting_rate.unwrap_or(d.planting_rate),
        distractor_rate: a.distractor_rate.unwrap_or(d.distractor_rate),
        bitext_pairs: a.bitext_pairs.unwrap_or(d.bitext_pairs),
        heldout_pairs: a.heldout_pairs.unwrap_or(d.heldout_pairs),
        mt_word_error_rates: if a.mt_wer.is_empty() { d.mt_word_error_rates } else { a.mt_wer.clone() },
        tables: a.tables.unwrap_or(d.tables),
    };
    let data = generate(&spec)?;
    data.write(&a.out)?;
    Ok(format!("synth: {} -> {}", data.summary(), a.out.display()))
}

fn cmd_train_searcher(a: &TrainSearcherArgs, seed: u64) -> CliResult<String> {
    let bitext = load_bitext(&a.bitext)?;
    let vocab = Vocabulary::from_bitext_english(&bitext, a.vocab_size.unwrap_or(usize::MAX));
    let d = SearcherConfig::default();
    let cfg = SearcherConfig {
        dim: a.dim.unwrap_or(d.dim),
        depth: a.depth.unwrap_or(d.depth),
        epochs: a.epochs.unwrap_or(d.epochs),
        learning_rate: a.learning_rate.unwrap_or(d.learning_rate),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        negatives_per_positive: a.negatives.unwrap_or(d.negatives_per_positive),
        full_vocab_threshold: a.full_vocab_threshold.unwrap_or(d.full_vocab_threshold),
        seed,
        ..d
    };
    let fit = train_searcher(&bitext, &vocab, &cfg)?;
    fit.model.write(&a.out)?;
    Ok(format!(
        "train-searcher: pairs={} english_vocab={} foreign_vocab={} epochs={} final_loss={:?}",
        bitext.len(),
        vocab.len(),
        fit.model.foreign_words().len(),
        fit.epoch_losses.len(),
        fit.epoch_losses.last().copied().unwrap_or(f64::NAN)
    ))
}

fn heldout_vocabulary(heldout: &Bitext) -> Vocabulary {
    Vocabulary::from_bitext_english(heldout, usize::MAX)
}

fn cmd_fit_ensemble(a: &FitEnsembleArgs, seed: u64) -> CliResult<String> {
    let heldout = load_bitext(&a.heldout)?;
    let hyps = MtHypothesisSet::load(&a.heldout_hyps)?;
    hyps.validate_against(&heldout.foreign_corpus())?;
    let d = EnsembleConfig::default();
    let cfg = EnsembleConfig {
        l2: a.l2.unwrap_or(d.l2),
        negatives_per_positive: a.negatives.unwrap_or(d.negatives_per_positive),
        max_iterations: a.max_iterations.unwrap_or(d.max_iterations),
        seed,
        ..d
    };
    let fit = fit_mt_ensemble(&hyps, &heldout, &heldout_vocabulary(&heldout), &cfg)?;
    fit.model.write(&a.out)?;
    Ok(format!(
        "fit-ensemble: systems={} iterations={} loss={:?}",
        fit.model.systems().len(),
        fit.iterations,
        fit.loss
    ))
}

/// Evidence sources loaded from disk.
struct Sources {
    tables: Vec<TranslationTable>,
    mt: Option<(MtEnsembleModel, MtHypothesisSet)>,
    searcher: Option<SearcherModel>,
}

impl Sources {
    /// Loads the configured generators; `hyps` is the MT output matching the
    /// corpus the evidence will be built for.
    fn load(g: &GeneratorArgs, hyps: Option<&Path>) -> CliResult<Self> {
        if g.tables.is_empty() && g.mt_model.is_none() && g.searcher.is_none() {
            return usage("no evidence generator configured; give --table, --mt-model or --searcher");
        }
        let tables = g.tables.iter().map(load_translation_table).collect::<clir::Result<Vec<_>>>()?;
        let mt = match (&g.mt_model, hyps) {
            (Some(model), Some(hyps)) => Some((MtEnsembleModel::load(model)?, MtHypothesisSet::load(hyps)?)),
            (Some(_), None) => return usage("--mt-model needs the matching MT hypotheses file"),
            (None, _) => None,
        };
        let searcher = g.searcher.as_ref().map(SearcherModel::load).transpose()?;
        Ok(Sources { tables, mt, searcher })
    }

    fn generators(&self) -> Vec<Generator<'_>> {
        let mut out: Vec<Generator<'_>> = self.tables.iter().map(Generator::Table).collect();
        if let Some((model, hyps)) = &self.mt {
            out.push(Generator::MtEnsemble { model, hyps });
        }
        if let Some(model) = &self.searcher {
            out.push(Generator::Searcher(model));
        }
        out
    }

    fn matrices(&self, corpus: &Corpus, words: &BTreeSet<Token>, epsilon: f64) -> CliResult<Vec<EvidenceMatrix>> {
        if let Some((_, hyps)) = &self.mt {
            hyps.validate_against(corpus)?;
        }
        let gens = self.generators();
        let mut tags = BTreeSet::new();
        for g in &gens {
            if !tags.insert(g.tag()) {
                return usage(format!("two generators share the name {}", g.tag()));
            }
        }
        Ok(gens
            .into_iter()
            .map(|g| build_evidence(g, corpus, words, epsilon))
            .collect::<clir::Result<Vec<_>>>()?)
    }
}

fn check_epsilon(epsilon: f64) -> CliResult<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return usage(format!("epsilon must lie in (0, 0.5), got {epsilon}"));
    }
    Ok(())
}

/// Fits mixture weights for `sources` on a held-out bitext.
fn fit_weights(
    sources: &GeneratorArgs,
    heldout: &Path,
    heldout_hyps: Option<&Path>,
    cfg: &MixtureConfig,
    epsilon: f64,
) -> CliResult<(MixtureWeights, usize)> {
    let heldout = load_bitext(heldout)?;
    let sources = Sources::load(sources, heldout_hyps)?;
    let vocab = heldout_vocabulary(&heldout);
    let words: BTreeSet<Token> = vocab.words().iter().cloned().collect();
    let corpus = heldout.foreign_corpus();
    debug_assert!(corpus.contains(BITEXT_DOC_ID));
    let matrices = sources.matrices(&corpus, &words, epsilon)?;
    let fit = fit_mixture(&matrices, &heldout, &vocab, cfg)?;
    Ok((fit.weights, fit.log_likelihoods.len()))
}

fn format_weights(w: &MixtureWeights) -> String {
    w.iter().map(|(t, v)| format!("{t}={v:.6}")).collect::<Vec<_>>().join(" ")
}

fn cmd_fit_mixture(a: &FitMixtureArgs, seed: u64) -> CliResult<String> {
    check_epsilon(a.epsilon)?;
    let d = MixtureConfig::default();
    let cfg = MixtureConfig {
        negatives_per_positive: a.negatives.unwrap_or(d.negatives_per_positive),
        max_iterations: a.max_iterations.unwrap_or(d.max_iterations),
        seed,
        ..d
    };
    let (weights, iterations) = fit_weights(&a.generators, &a.heldout, a.heldout_hyps.as_deref(), &cfg, a.epsilon)?;
    weights.write(&a.out)?;
    Ok(format!(
        "fit-mixture: iterations={iterations} loglik={:?} {}",
        weights.log_likelihood().unwrap_or(f64::NAN),
        format_weights(&weights)
    ))
}

/// Builds evidence for every generator and merges them. A single generator
/// is used as is; several are mixed with `weights`, uniform if absent.
fn combined_evidence(
    sources: &Sources,
    corpus: &Corpus,
    words: &BTreeSet<Token>,
    weights: Option<&MixtureWeights>,
    epsilon: f64,
) -> CliResult<EvidenceMatrix> {
    let mut matrices = sources.matrices(corpus, words, epsilon)?;
    if matrices.len() == 1 {
        return Ok(matrices.pop().expect("one matrix"));
    }
    let weights = match weights {
        Some(w) => w.clone(),
        None => {
            log::warn!("no mixture weights given; mixing {} generators uniformly", matrices.len());
            MixtureWeights::uniform(matrices.iter().map(|m| m.generator().to_string()))?
        }
    };
    Ok(combine(&matrices, &weights)?)
}

fn cmd_dump_evidence(a: &DumpEvidenceArgs) -> CliResult<String> {
    check_epsilon(a.epsilon)?;
    let corpus = load_corpus(&a.corpus)?;
    let queries = load_queries(&a.queries)?;
    let sources = Sources::load(&a.generators, a.hyps.as_deref())?;
    let weights = a.weights.as_ref().map(MixtureWeights::load).transpose()?;
    let ev = combined_evidence(&sources, &corpus, &query_words(&queries), weights.as_ref(), a.epsilon)?;
    ev.write(&a.out)?;
    Ok(format!(
        "dump-evidence: generator={} cells={} -> {}",
        ev.generator(),
        ev.len(),
        a.out.display()
    ))
}

/// Keeps lexical queries, warning about the rest.
fn lexical_only(queries: Vec<Query>) -> (Vec<Query>, usize) {
    let total = queries.len();
    let kept: Vec<Query> = queries
        .into_iter()
        .filter(|q| {
            let ok = q.kind == QueryKind::Lexical;
            if !ok {
                log::warn!("skipping {} query {}", q.kind, q.id);
            }
            ok
        })
        .collect();
    let skipped = total - kept.len();
    (kept, skipped)
}

fn cmd_retrieve(a: &RetrieveArgs, seed: u64) -> CliResult<String> {
    check_epsilon(a.epsilon)?;
    let thresholds = ThresholdConfig {
        epsilon: a.epsilon,
        ..ThresholdConfig::new(a.beta, a.gamma)?
    };
    let corpus = load_corpus(&a.corpus)?;
    let (queries, skipped) = lexical_only(load_queries(&a.queries)?);
    let sources = Sources::load(&a.generators, a.hyps.as_deref())?;
    std::fs::create_dir_all(&a.out).map_err(|e| clir::Error::io(&a.out, e))?;

    let weights = match a.weights.as_deref() {
        Some("fit") => {
            let Some(heldout) = &a.heldout else {
                return usage("--weights fit needs --heldout");
            };
            let cfg = MixtureConfig { seed, ..MixtureConfig::default() };
            let (w, _) = fit_weights(&a.generators, heldout, a.heldout_hyps.as_deref(), &cfg, a.epsilon)?;
            w.write(a.out.join(outputs::WEIGHTS))?;
            Some(w)
        }
        Some(path) => Some(MixtureWeights::load(path)?),
        None => None,
    };
    let ev = combined_evidence(&sources, &corpus, &query_words(&queries), weights.as_ref(), a.epsilon)?;

    let results = queries
        .par_iter()
        .map(|q| {
            let list = rank(&ev, &corpus, q)?;
            let decision = decide(&list, &thresholds)?;
            Ok((decision, list))
        })
        .collect::<clir::Result<Vec<_>>>()?;
    let lists: Vec<RankedList> = results.iter().map(|(_, l)| l.clone()).collect();
    let decisions: Vec<_> = results.iter().map(|(d, _)| d.clone()).collect();
    write_run(a.out.join(outputs::RUN), &lists, &a.run_tag)?;
    write_cutoffs(a.out.join(outputs::CUTOFFS), &decisions)?;
    write_returned(a.out.join(outputs::RETURNED), &results)?;
    let returned: usize = decisions.iter().map(|d| d.k).sum();
    Ok(format!(
        "retrieve: generator={} queries={} skipped={skipped} returned={returned} -> {}",
        ev.generator(),
        queries.len(),
        a.out.display()
    ))
}

fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<String> {
    if !(a.beta > 0.0) {
        return usage(format!("beta must be positive, got {}", a.beta));
    }
    let corpus = load_corpus(&a.corpus)?;
    let (queries, _) = lexical_only(load_queries(&a.queries)?);
    let judgments = load_judgments(&a.judgments)?;
    judgments.validate_against(&corpus)?;
    let mut returned: BTreeMap<String, BTreeSet<String>> =
        queries.iter().map(|q| (q.id.clone(), BTreeSet::new())).collect();
    for (qid, docs) in load_returned(&a.returned)? {
        match returned.get_mut(&qid) {
            Some(slot) => *slot = docs,
            None => {
                return Err(clir::Error::Invariant(format!("returned set for unknown query {qid}")).into());
            }
        }
    }
    let score = score_run(&returned, &judgments, &corpus, a.beta)?;
    if let Some(path) = &a.report {
        score.write_report(path)?;
    }
    Ok(format!("evaluate: excluded={} {}", score.excluded.len(), summary_last(&score)))
}

/// `beta=… n_q=… mAQWV=…`, the score last.
fn summary_last(score: &clir::scorer::RunScore) -> String {
    format!("beta={:?} n_q={} mAQWV={:?}", score.beta, score.n_q, score.maqwv)
}
