//! Command-line surface. [`run`] parses arguments, executes one command
//! and returns the process exit code; errors are reported as a single
//! `error[<kind>]: <message>` line on stderr.

mod bundle;
mod selftest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::{train_baseline, BaselineModel};
use crate::config::{Energy, ModelKind, Objective, Pairing, TrainConfig};
use crate::corpus::{tokenize, Corpus, VocabConfig, Vocabulary};
use crate::error::{Error, ErrorKind, Result};
use crate::eval::{self, CosineCombo, EntailMeasure, LexsubMethod};
use crate::gauss::CovKind;
use crate::oracles::{synth_corpus, SynthSpec};

pub use bundle::{infer, nearest, AnyModel, ModelBundle, NearestMeasure, SaveMode, FORMAT_VERSION};
pub use selftest::{selftest, SuiteResult};

/// Environment variable naming the telemetry CSV path when `--log` is absent.
pub const LOG_ENV: &str = "BSG_LOG";

#[derive(Debug, Parser)]
#[command(name = "bsg", version, about = "Bayesian Skip-gram word embeddings")]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count a corpus and write `word<TAB>count` lines.
    BuildVocab(BuildVocabArgs),
    /// Train a BSG or baseline model on a one-document-per-line corpus.
    Train(TrainArgs),
    /// Spearman correlation of mean cosines with gold similarity scores.
    EvalSim(EvalArgs),
    /// Best-threshold F1 on labelled entailment pairs.
    EvalEntail(EntailArgs),
    /// Direction accuracy on the positive entailment pairs.
    EvalDirection(DirectionArgs),
    /// Mean GAP on lexical substitution instances (JSON lines).
    EvalLexsub(LexsubArgs),
    /// Words closest to a query word.
    Nearest(NearestArgs),
    /// Posterior of one token in a sentence.
    Infer(InferArgs),
    /// Prior log-determinant against log frequency, as CSV.
    ReportLogdet(ReportArgs),
    /// Generate a synthetic corpus with a sense-tag sidecar.
    SynthCorpus(SynthArgs),
    /// Run the oracle suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    #[arg(long, default_value_t = 280_000)]
    pub max_size: usize,
    /// Keep case instead of lowercasing tokens.
    #[arg(long)]
    pub no_lowercase: bool,
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub vocab: VocabArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Vocabulary TSV from build-vocab; counted from the corpus if absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// bsg, sg, w2g_s or w2g_d.
    #[arg(long, default_value = "bsg")]
    pub model: String,
    /// binary or text.
    #[arg(long, default_value = "binary")]
    pub format: String,
    /// Telemetry CSV `batch_index,loss,examples_seen`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub vocab_args: VocabArgs,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Subsampling threshold t.
    #[arg(long, default_value_t = 1e-4)]
    pub subsample: f64,
    #[arg(long, default_value_t = 1.0)]
    pub neg_exponent: f64,
    #[arg(long, default_value_t = 1)]
    pub negatives: usize,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 22_000)]
    pub batch_size: usize,
    /// Defaults per model kind.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// hinge or soft.
    #[arg(long, default_value = "hinge")]
    pub objective: String,
    /// aligned or all_pairs.
    #[arg(long, default_value = "aligned")]
    pub pairing: String,
    /// spherical or diagonal; w2g_s and w2g_d fix it.
    #[arg(long, default_value = "spherical")]
    pub cov: String,
    /// expected_likelihood or negated_kl.
    #[arg(long, default_value = "expected_likelihood")]
    pub energy: String,
    #[arg(long)]
    pub tie_context: bool,
    #[arg(long)]
    pub tie_encoder_input: bool,
    #[arg(long, default_value_t = 20.0)]
    pub max_mean_norm: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub min_var: f64,
    #[arg(long, default_value_t = 10.0)]
    pub max_var: f64,
    /// Accepted for compatibility; training is always reproducible.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct EntailArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// neg_kl or cosine.
    #[arg(long, default_value = "neg_kl")]
    pub measure: String,
    /// Write a score histogram CSV here.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct DirectionArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Also report the word-frequency baseline.
    #[arg(long)]
    pub frequency_baseline: bool,
}

#[derive(Debug, Args)]
pub struct LexsubArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// kl, add or mult.
    #[arg(long, default_value = "kl")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct NearestArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// cosine_mean or neg_kl.
    #[arg(long, default_value = "cosine_mean")]
    pub measure: String,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Whitespace-separated tokens.
    #[arg(long)]
    pub sentence: String,
    #[arg(long)]
    pub target_index: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV destination; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// polysemy or hypernymy.
    #[arg(long, default_value = "polysemy")]
    pub kind: String,
    #[arg(long, default_value_t = 100_000)]
    pub tokens: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub hypernyms: usize,
    #[arg(long, default_value_t = 4)]
    pub hyponyms: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// `position<TAB>word<TAB>true_group` per tagged occurrence.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Entailment pairs (hypernymy only): each hyponym/hypernym pair with
    /// label 1 and its reverse with label 0.
    #[arg(long)]
    pub gold: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Fewer random cases per suite.
    #[arg(long)]
    pub quick: bool,
}

/// Parse `args` (program name first), run the command and return the exit
/// code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = write!(out, "{e}");
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand {
                    1
                } else {
                    0
                };
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "error[{}]: {first}", ErrorKind::Usage.label());
            return ErrorKind::Usage.exit_code();
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e.kind();
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error[{}]: {msg}", kind.label());
            kind.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be >= 1".into()));
        }
        // A second call in the same process keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::BuildVocab(a) => build_vocab(&a, out),
        Command::Train(a) => train(&a, out),
        Command::EvalSim(a) => {
            let model = ModelBundle::load(&a.model)?;
            let pairs = eval::read_similarity(eval::open(&a.data)?)?;
            let r = eval::eval_similarity(&model, &pairs)?;
            writeln!(
                out,
                "spearman\t{}\nused\t{}\noov\t{}",
                r.rho, r.n_used, r.n_oov
            )?;
            Ok(())
        }
        Command::EvalEntail(a) => eval_entail(&a, out),
        Command::EvalDirection(a) => {
            let model = ModelBundle::load(&a.model)?;
            let pairs = eval::read_entailment(eval::open(&a.data)?)?;
            let r = eval::eval_directionality(&model, &pairs)?;
            writeln!(
                out,
                "accuracy\t{}\nused\t{}\noov\t{}",
                r.accuracy, r.n_used, r.n_oov
            )?;
            if a.frequency_baseline {
                let b = eval::frequency_direction_baseline(&model.vocab, &pairs)?;
                writeln!(out, "frequency_baseline\t{}", b.accuracy)?;
            }
            Ok(())
        }
        Command::EvalLexsub(a) => {
            let model = ModelBundle::load(&a.model)?;
            let method = match a.method.as_str() {
                "kl" => LexsubMethod::Kl,
                other => LexsubMethod::Cosine(other.parse::<CosineCombo>()?),
            };
            let data = eval::read_lexsub(eval::open(&a.data)?)?;
            let r = eval::eval_lexsub(&model, &data, a.window, method)?;
            writeln!(
                out,
                "gap\t{}\nscored\t{}\nskipped\t{}",
                r.mean_gap, r.n_scored, r.n_skipped
            )?;
            Ok(())
        }
        Command::Nearest(a) => {
            let model = ModelBundle::load(&a.model)?;
            for (w, s) in nearest(&model, &a.word, a.k, a.measure.parse()?)? {
                writeln!(out, "{w}\t{s}")?;
            }
            Ok(())
        }
        Command::Infer(a) => {
            let model = ModelBundle::load(&a.model)?;
            let tokens = tokenize(&a.sentence, false);
            let q = infer(&model, &tokens, a.target_index, a.window)?;
            let join = |v: Vec<f64>| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
            writeln!(out, "mean\t{}", join(q.mean().to_vec()))?;
            writeln!(
                out,
                "var\t{}",
                join((0..q.dim()).map(|i| q.var_at(i)).collect())
            )?;
            Ok(())
        }
        Command::ReportLogdet(a) => {
            let model = ModelBundle::load(&a.model)?;
            let csv = eval::logdet_frequency_report(&model, &model.vocab)?.to_csv();
            match &a.out {
                Some(p) => std::fs::write(p, csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
            Ok(())
        }
        Command::SynthCorpus(a) => synth(&a, out),
        Command::Selftest(a) => {
            let results = selftest(a.quick, out)?;
            if let Some(bad) = results.iter().find(|r| !r.passed) {
                return Err(Error::Numerical(format!(
                    "selftest suite {} failed: {}",
                    bad.name, bad.detail
                )));
            }
            Ok(())
        }
    }
}

fn vocab_config(a: &VocabArgs, subsample: f64, neg_exponent: f64) -> VocabConfig {
    VocabConfig {
        max_size: a.max_size,
        min_count: a.min_count,
        subsample,
        neg_exponent,
    }
}

fn build_vocab(a: &BuildVocabArgs, out: &mut dyn Write) -> Result<()> {
    let defaults = VocabConfig::default();
    let cfg = vocab_config(&a.vocab, defaults.subsample, defaults.neg_exponent);
    let vocab = Corpus::File(a.corpus.clone())
        .count(!a.vocab.no_lowercase)?
        .finish(&cfg)?;
    vocab.save_tsv(&a.out)?;
    writeln!(out, "words\t{}", vocab.len())?;
    Ok(())
}

/// The training configuration described by `a`.
pub fn train_config(a: &TrainArgs, kind: ModelKind) -> Result<TrainConfig> {
    let cov = match kind {
        ModelKind::W2gS => CovKind::Spherical,
        ModelKind::W2gD => CovKind::Diagonal,
        _ => a.cov.parse()?,
    };
    let cfg = TrainConfig {
        dim: a.dim,
        hidden: a.hidden,
        window: a.window,
        subsample: a.subsample,
        neg_exponent: a.neg_exponent,
        negatives_per_positive: a.negatives,
        margin: a.margin,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        epochs: a.epochs,
        seed: a.seed,
        objective: parse_objective(&a.objective)?,
        pairing: parse_pairing(&a.pairing)?,
        cov,
        tie_encoder_input: a.tie_encoder_input,
        tie_context: a.tie_context,
        lowercase: !a.vocab_args.no_lowercase,
        deterministic: true,
        energy: parse_energy(&a.energy)?,
        max_mean_norm: a.max_mean_norm,
        min_var: a.min_var,
        max_var: a.max_var,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_objective(s: &str) -> Result<Objective> {
    match s {
        "hinge" => Ok(Objective::Hinge),
        "soft" => Ok(Objective::Soft),
        other => Err(Error::InvalidConfig(format!("unknown objective {other:?}"))),
    }
}

fn parse_pairing(s: &str) -> Result<Pairing> {
    match s {
        "aligned" => Ok(Pairing::Aligned),
        "all_pairs" | "all-pairs" => Ok(Pairing::AllPairs),
        other => Err(Error::InvalidConfig(format!("unknown pairing {other:?}"))),
    }
}

fn parse_energy(s: &str) -> Result<Energy> {
    match s {
        "expected_likelihood" | "el" => Ok(Energy::ExpectedLikelihood),
        "negated_kl" | "kl" => Ok(Energy::NegatedKl),
        other => Err(Error::InvalidConfig(format!("unknown energy {other:?}"))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::at_path(path, e))?,
    ))
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let kind: ModelKind = a.model.parse()?;
    let mode: SaveMode = a.format.parse()?;
    let cfg = train_config(a, kind)?;
    let corpus = Corpus::File(a.corpus.clone());
    let vocab = match &a.vocab {
        Some(p) => Vocabulary::load_tsv(p, cfg.subsample, cfg.neg_exponent)?,
        None => corpus.count(cfg.lowercase)?.finish(&vocab_config(
            &a.vocab_args,
            cfg.subsample,
            cfg.neg_exponent,
        ))?,
    };
    let log_path = a
        .log
        .clone()
        .or_else(|| std::env::var_os(LOG_ENV).map(PathBuf::from));
    let mut log = match &log_path {
        Some(p) => Some(create(p)?),
        None => None,
    };
    let telemetry = log.as_mut().map(|w| w as &mut dyn Write);
    let (model, report) = match kind {
        ModelKind::Bsg => {
            let (m, r) = crate::bsg::train(&corpus, &vocab, &cfg, telemetry)?;
            (AnyModel::Bsg(m), r)
        }
        _ => {
            let (m, r) = train_baseline(kind, &corpus, &vocab, &cfg, telemetry)?;
            let m = match m {
                BaselineModel::Sg(m) => AnyModel::Sg(m),
                BaselineModel::W2g(m) => AnyModel::W2g(m),
            };
            (m, r)
        }
    };
    if let Some(mut w) = log {
        w.flush()?;
    }
    let bundle = ModelBundle::new(kind, vocab, cfg, model)?;
    bundle.save(&a.out, mode)?;
    for (e, l) in report.epoch_mean_loss.iter().enumerate() {
        writeln!(out, "epoch\t{}\tmean_loss\t{l}", e + 1)?;
    }
    writeln!(
        out,
        "batches\t{}\nexamples\t{}\nstream_digest\t{:016x}",
        report.batches, report.examples, report.stream_digest
    )?;
    Ok(())
}

fn eval_entail(a: &EntailArgs, out: &mut dyn Write) -> Result<()> {
    let model = ModelBundle::load(&a.model)?;
    let measure: EntailMeasure = a.measure.parse()?;
    let pairs = eval::read_entailment(eval::open(&a.data)?)?;
    let r = eval::eval_entailment(&model, &pairs, measure)?;
    writeln!(
        out,
        "f1\t{}\nthreshold\t{}\noov\t{}",
        r.f1, r.threshold, r.n_oov
    )?;
    if let Some(p) = &a.histogram {
        if a.bins == 0 {
            return Err(Error::InvalidConfig("--bins must be >= 1".into()));
        }
        std::fs::write(
            p,
            eval::histogram_csv(&eval::score_histogram(&r.scores, a.bins)),
        )?;
    }
    Ok(())
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let spec = match a.kind.as_str() {
        "polysemy" => SynthSpec::polysemy(a.tokens, a.seed),
        "hypernymy" => {
            if a.hypernyms == 0 || a.hyponyms < 2 {
                return Err(Error::InvalidConfig(
                    "hypernymy needs >= 1 hypernym with >= 2 hyponyms".into(),
                ));
            }
            SynthSpec::hypernymy(a.hypernyms, a.hyponyms, a.tokens, a.seed)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown synthetic corpus kind {other:?}"
            )))
        }
    };
    if a.gold.is_some() && a.kind != "hypernymy" {
        return Err(Error::InvalidConfig("--gold needs --kind hypernymy".into()));
    }
    let corpus = synth_corpus(&spec)?;
    let mut w = create(&a.out)?;
    corpus.write_text(&mut w)?;
    w.flush()?;
    if let Some(p) = &a.sidecar {
        let mut w = create(p)?;
        corpus.write_sidecar(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = &a.gold {
        let mut w = create(p)?;
        for h in 0..a.hypernyms {
            for g in h * a.hyponyms..(h + 1) * a.hyponyms {
                writeln!(w, "hypo{g}\thyper{h}\t1")?;
                writeln!(w, "hyper{h}\thypo{g}\t0")?;
            }
        }
        w.flush()?;
    }
    writeln!(
        out,
        "documents\t{}\ntokens\t{}\ntagged\t{}",
        corpus.docs.len(),
        corpus.n_tokens(),
        corpus.tags.len()
    )?;
    Ok(())
}
