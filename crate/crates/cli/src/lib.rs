//! `silverqa`: the corpus pipeline as subcommands over one corpus directory.

mod annotate;
mod config;
mod corpus;
mod evaluate;
mod modeling;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use silverqa_core::model::Split;
use silverqa_core::profiles::ProfileRegistry;
use silverqa_core::store::CorpusLayout;
use silverqa_core::textproc::Tokenizer;

pub use config::{RunConfig, Threshold};

#[derive(Debug, Parser)]
#[command(name = "silverqa", version, about = "Silver-labeled non-factoid QA corpus pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus root directory.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Directory of language profiles (default: built-in registry).
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,
    /// Print machine-readable JSON reports on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch pages breadth-first from the configured seeds.
    Crawl(corpus::CrawlArgs),
    /// Turn stored pages into article records.
    Extract(corpus::ExtractArgs),
    /// Derive silver QA pairs from articles.
    Curate(LangArgs),
    /// Assign train/dev/test splits at article granularity.
    Split(corpus::SplitArgs),
    /// Corpus statistics.
    Stats(LangArgs),
    /// Most frequent question n-grams.
    Ngrams(corpus::NgramArgs),
    /// Build answer paragraph selection instances.
    BuildInstances(corpus::BuildArgs),
    /// Fit a TF-IDF model per language on the train split.
    FitTfidf(LangArgs),
    /// Write per-language stopword lists.
    Stopwords(LangArgs),
    /// Train the lexical focal-loss classifier.
    TrainLexical(modeling::TrainArgs),
    /// Score instances and write score records.
    Score(modeling::ScoreArgs),
    /// Classification metrics and success rate.
    Evaluate(evaluate::EvaluateArgs),
    /// Metrics over a threshold grid.
    Sweep(evaluate::SweepArgs),
    /// Keep only the best-scoring context paragraphs per question.
    Reduce(evaluate::ReduceArgs),
    /// Fraction of generations containing the gold answer.
    WinRatio(evaluate::WinRatioArgs),
    /// Run the annotation service.
    Serve(annotate::ServeArgs),
    /// Cohen's kappa between two annotators.
    Kappa(annotate::KappaArgs),
    /// Union annotator selections into gold records.
    DeriveGold(annotate::DeriveGoldArgs),
}

#[derive(Debug, Clone, Args)]
pub(crate) struct LangArgs {
    /// Language code; repeat for several (default: every language present).
    #[arg(long = "lang")]
    langs: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub(crate) struct SplitSel {
    /// Split to read instances from.
    #[arg(long, default_value = "test")]
    split: Split,
}

/// A usage problem found after argument parsing (missing setting, bad
/// combination). Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub(crate) struct Ctx<'o> {
    pub cfg: RunConfig,
    pub layout: CorpusLayout,
    pub registry: ProfileRegistry,
    pub json: bool,
    pub pool: rayon::ThreadPool,
    out: &'o mut dyn Write,
}

impl Ctx<'_> {
    /// Writes a report: JSON with `--json`, otherwise the text rendering.
    pub fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) -> anyhow::Result<()> {
        if self.json {
            serde_json::to_writer_pretty(&mut *self.out, value)?;
            writeln!(self.out)?;
        } else {
            let t = text();
            self.out.write_all(t.as_bytes())?;
            if !t.ends_with('\n') {
                writeln!(self.out)?;
            }
        }
        Ok(())
    }

    pub fn write_raw(&mut self, s: &str) -> anyhow::Result<()> {
        self.out.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Languages requested on the command line, else in the config, else
    /// every language in `available`.
    pub fn languages(&self, flag: &[String], available: Vec<String>) -> anyhow::Result<Vec<String>> {
        let chosen = if !flag.is_empty() {
            flag.to_vec()
        } else if !self.cfg.languages.is_empty() {
            self.cfg.languages.clone()
        } else {
            available
        };
        if chosen.is_empty() {
            return Err(usage("no languages found in the corpus; pass --lang"));
        }
        for l in &chosen {
            self.registry.get(l)?;
        }
        Ok(chosen)
    }

    pub fn tokenizer(&self) -> anyhow::Result<Tokenizer> {
        Ok(Tokenizer::from_spec(&self.cfg.instances.tokenizer)?)
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn build_ctx<'o>(cli: &Cli, out: &'o mut dyn Write) -> anyhow::Result<Ctx<'o>> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &cli.corpus {
        cfg.corpus = Some(c.clone());
    }
    if let Some(p) = &cli.profiles {
        cfg.profiles = Some(p.clone());
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    let registry = match &cfg.profiles {
        Some(dir) => ProfileRegistry::load_dir(dir)
            .with_context(|| format!("loading profiles from {}", dir.display()))?,
        None => ProfileRegistry::builtin(),
    };
    let root = cfg.corpus.clone().unwrap_or_else(|| PathBuf::from("corpus"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()?;
    Ok(Ctx {
        cfg,
        layout: CorpusLayout::new(root),
        registry,
        json: cli.json,
        pool,
        out,
    })
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut ctx = build_ctx(&cli, out)?;
    let ctx = &mut ctx;
    match cli.command {
        Command::Crawl(a) => corpus::crawl(ctx, a),
        Command::Extract(a) => corpus::extract(ctx, a),
        Command::Curate(a) => corpus::curate(ctx, a),
        Command::Split(a) => corpus::split(ctx, a),
        Command::Stats(a) => corpus::stats(ctx, a),
        Command::Ngrams(a) => corpus::ngrams(ctx, a),
        Command::BuildInstances(a) => corpus::build(ctx, a),
        Command::FitTfidf(a) => modeling::fit_tfidf(ctx, a),
        Command::Stopwords(a) => modeling::stopwords(ctx, a),
        Command::TrainLexical(a) => modeling::train(ctx, a),
        Command::Score(a) => modeling::score(ctx, a),
        Command::Evaluate(a) => evaluate::evaluate(ctx, a),
        Command::Sweep(a) => evaluate::sweep(ctx, a),
        Command::Reduce(a) => evaluate::reduce(ctx, a),
        Command::WinRatio(a) => evaluate::win_ratio(ctx, a),
        Command::Serve(a) => annotate::serve(ctx, a),
        Command::Kappa(a) => annotate::kappa(ctx, a),
        Command::DeriveGold(a) => annotate::derive_gold(ctx, a),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status: 0 success, 1 domain error, 2 usage error.
/// The error and its causes joined by `: `, skipping causes the previous
/// message already quotes.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
