use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use silverqa_core::instances::TrainingInstance;
use silverqa_core::model::{Article, Split};
use silverqa_core::profiles::parse_word_list;
use silverqa_core::scorers::{
    external_score, featurize, fit_tfidf as fit_tfidf_model, train_lexical, EmbeddingScorer, EmbeddingStore,
    ExternalEndpoint, ExternalResult, LexicalModel, LexicalScorer, ScoreRecord, Scorer,
    TfidfModel, TfidfScorer, TrivialKind, TrivialScorer, FEATURE_NAMES,
};
use silverqa_core::store::{read_json, write_json, write_jsonl};
use silverqa_core::textproc::{derive_stopwords, StopwordSource, Tokenizer};

use crate::corpus::load_instances;
use crate::{usage, Ctx, LangArgs, SplitSel};

/// Articles with at least one train pair; every article when nothing has
/// been split yet.
fn train_articles(ctx: &Ctx, lang: &str) -> anyhow::Result<Vec<Article>> {
    let articles = ctx.layout.load_articles(lang)?;
    let pairs = if ctx.layout.qa(lang).exists() {
        ctx.layout.load_pairs(lang)?
    } else {
        Vec::new()
    };
    let train: BTreeSet<&str> = pairs
        .iter()
        .filter(|p| p.split == Split::Train)
        .map(|p| p.article_id.as_str())
        .collect();
    if train.is_empty() {
        log::warn!("{lang}: no train split; using every article");
        return Ok(articles);
    }
    Ok(articles
        .into_iter()
        .filter(|a| train.contains(a.id.as_str()))
        .collect())
}

fn stopword_set(ctx: &Ctx, lang: &str, articles: &[Article], tokenizer: &Tokenizer) -> anyhow::Result<BTreeSet<String>> {
    let path = ctx.layout.stopwords(lang);
    if path.exists() {
        let src = std::fs::read_to_string(&path).with_context(|| path.display().to_string())?;
        return Ok(parse_word_list(&src).into_iter().collect());
    }
    let profile = ctx.registry.get(lang)?;
    let texts = articles.iter().flat_map(|a| a.paragraphs());
    Ok(derive_stopwords(texts, profile, tokenizer)?.to_set())
}

#[derive(Debug, Serialize)]
struct StopwordRow {
    source: StopwordSource,
    words: usize,
}

pub(crate) fn stopwords(ctx: &mut Ctx, a: LangArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs, ctx.layout.article_languages()?)?;
    let tokenizer = ctx.tokenizer()?;
    let mut report = BTreeMap::new();
    for lang in langs {
        let articles = train_articles(ctx, &lang)?;
        let list = derive_stopwords(
            articles.iter().flat_map(|a| a.paragraphs()),
            ctx.registry.get(&lang)?,
            &tokenizer,
        )?;
        let path = ctx.layout.stopwords(&lang);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut body = list.words.join("\n");
        body.push('\n');
        std::fs::write(&path, body).with_context(|| path.display().to_string())?;
        report.insert(
            lang,
            StopwordRow {
                source: list.source,
                words: list.words.len(),
            },
        );
    }
    ctx.emit(&report, || {
        report
            .iter()
            .map(|(l, r)| format!("{l}: {} stopwords ({:?})\n", r.words, r.source))
            .collect()
    })
}

#[derive(Debug, Serialize)]
struct TfidfRow {
    documents: usize,
    vocabulary: usize,
    stopwords: usize,
}

pub(crate) fn fit_tfidf(ctx: &mut Ctx, a: LangArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs, ctx.layout.article_languages()?)?;
    let tokenizer = ctx.tokenizer()?;
    let mut report = BTreeMap::new();
    for lang in langs {
        let articles = train_articles(ctx, &lang)?;
        let stop = stopword_set(ctx, &lang, &articles, &tokenizer)?;
        let model = fit_tfidf_model(
            articles.iter().flat_map(|a| a.paragraphs()),
            &stop,
            &tokenizer,
            &lang,
            "train",
        )?;
        write_json(&ctx.layout.tfidf_model(&lang), &model)?;
        report.insert(
            lang,
            TfidfRow {
                documents: model.documents,
                vocabulary: model.vocabulary.len(),
                stopwords: model.stopwords.len(),
            },
        );
    }
    ctx.emit(&report, || {
        report
            .iter()
            .map(|(l, r)| {
                format!(
                    "{l}: {} terms over {} paragraphs ({} stopwords)\n",
                    r.vocabulary, r.documents, r.stopwords
                )
            })
            .collect()
    })
}

#[derive(Debug, Clone, Args)]
pub(crate) struct TrainArgs {
    #[command(flatten)]
    langs: LangArgs,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Mini-batch size; 0 for full batch.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct TrainRow {
    instances: usize,
    positives: usize,
    steps: usize,
    final_loss: Option<f64>,
    train_accuracy: f64,
}

fn features(ctx: &Ctx, instances: &[TrainingInstance], tfidf: &TfidfModel, tokenizer: &Tokenizer) -> anyhow::Result<Vec<Vec<f64>>> {
    let rows: Vec<silverqa_core::Result<Vec<f64>>> = ctx.pool.install(|| {
        instances
            .par_iter()
            .map(|i| featurize(i, tfidf, tokenizer))
            .collect()
    });
    Ok(rows.into_iter().collect::<silverqa_core::Result<_>>()?)
}

pub(crate) fn train(ctx: &mut Ctx, a: TrainArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs.langs, ctx.layout.qa_languages()?)?;
    let tokenizer = ctx.tokenizer()?;
    let mut section = ctx.cfg.train.clone();
    section.steps = a.steps.or(section.steps);
    section.learning_rate = a.learning_rate.or(section.learning_rate);
    section.batch_size = a.batch_size.or(section.batch_size);
    section.gamma = a.gamma.or(section.gamma);
    section.seed = a.seed.or(section.seed);
    let loss = section.loss_config();
    let hyper = section.hyper(ctx.cfg.seed());
    let mut report = BTreeMap::new();
    for lang in langs {
        let tfidf: TfidfModel = read_json(&ctx.layout.tfidf_model(&lang))
            .with_context(|| format!("{lang}: run fit-tfidf first"))?;
        let instances = load_instances(ctx, &lang, Split::Train)?;
        if instances.is_empty() {
            return Err(anyhow::anyhow!("{lang}: no train instances"));
        }
        let xs = features(ctx, &instances, &tfidf, &tokenizer)?;
        let data: Vec<(Vec<f64>, u8)> = xs.into_iter().zip(instances.iter().map(|i| i.label)).collect();
        let model = train_lexical(&data, &FEATURE_NAMES, loss, hyper)?;
        let correct = data
            .iter()
            .filter(|(x, y)| u8::from(model.predict(x) >= 0.5) == *y)
            .count();
        write_json(&ctx.layout.lexical_model(&lang), &model)?;
        report.insert(
            lang,
            TrainRow {
                instances: data.len(),
                positives: data.iter().filter(|(_, y)| *y == 1).count(),
                steps: model.loss_log.len(),
                final_loss: model.loss_log.last().copied(),
                train_accuracy: correct as f64 / data.len() as f64,
            },
        );
    }
    ctx.emit(&report, || {
        report
            .iter()
            .map(|(l, r)| {
                format!(
                    "{l}: {} steps on {} instances, loss {:.4}, train accuracy {:.1}%\n",
                    r.steps,
                    r.instances,
                    r.final_loss.unwrap_or(f64::NAN),
                    r.train_accuracy * 100.0
                )
            })
            .collect()
    })
}

#[derive(Debug, Clone, Args)]
pub(crate) struct ScorerArgs {
    /// ones, zeros, random, tfidf, lexical, embedding or external.
    #[arg(long)]
    pub scorer: Option<String>,
    /// Seed of the random baseline.
    #[arg(long)]
    pub scorer_seed: Option<u64>,
    /// JSONL of precomputed vectors for the embedding scorer.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// External scorer program and arguments, whitespace separated.
    #[arg(long)]
    pub external_cmd: Option<String>,
    /// host:port of an external scorer.
    #[arg(long)]
    pub external_tcp: Option<String>,
}

impl ScorerArgs {
    pub fn kind(&self, ctx: &Ctx) -> anyhow::Result<String> {
        self.scorer
            .clone()
            .or_else(|| ctx.cfg.scorer.kind.clone())
            .ok_or_else(|| usage("no scorer selected: pass --scorer or set [scorer] kind"))
    }
}

fn par_score<S: Scorer + Sync>(ctx: &Ctx, scorer: &S, instances: &[TrainingInstance]) -> anyhow::Result<Vec<ScoreRecord>> {
    let rows: Vec<silverqa_core::Result<ScoreRecord>> =
        ctx.pool.install(|| instances.par_iter().map(|i| scorer.score_record(i)).collect());
    Ok(rows.into_iter().collect::<silverqa_core::Result<_>>()?)
}

/// Scores `instances` of one language with the selected backend. External
/// failures are logged and left out of the result.
pub(crate) fn score_instances(
    ctx: &Ctx,
    sa: &ScorerArgs,
    lang: &str,
    instances: &[TrainingInstance],
) -> anyhow::Result<Vec<ScoreRecord>> {
    let kind = sa.kind(ctx)?;
    let seed = sa
        .scorer_seed
        .or(ctx.cfg.scorer.seed)
        .unwrap_or_else(|| ctx.cfg.seed());
    match kind.as_str() {
        "ones" => par_score(ctx, &TrivialScorer(TrivialKind::Ones), instances),
        "zeros" => par_score(ctx, &TrivialScorer(TrivialKind::Zeros), instances),
        "random" => par_score(ctx, &TrivialScorer(TrivialKind::Random(seed)), instances),
        "tfidf" | "lexical" => {
            let tokenizer = ctx.tokenizer()?;
            let tfidf: TfidfModel = read_json(&ctx.layout.tfidf_model(lang))
                .with_context(|| format!("{lang}: run fit-tfidf first"))?;
            if kind == "tfidf" {
                return par_score(ctx, &TfidfScorer { model: &tfidf, tokenizer: &tokenizer }, instances);
            }
            let model: LexicalModel = read_json(&ctx.layout.lexical_model(lang))
                .with_context(|| format!("{lang}: run train-lexical first"))?;
            par_score(
                ctx,
                &LexicalScorer { model: &model, tfidf: &tfidf, tokenizer: &tokenizer },
                instances,
            )
        }
        "embedding" => {
            let path = sa
                .embeddings
                .clone()
                .or_else(|| ctx.cfg.scorer.embeddings.clone())
                .ok_or_else(|| usage("the embedding scorer needs --embeddings"))?;
            let store = EmbeddingStore::load(&path)?;
            let article_of: HashMap<String, String> = ctx
                .layout
                .load_pairs(lang)?
                .into_iter()
                .map(|p| (p.id, p.article_id))
                .collect();
            par_score(ctx, &EmbeddingScorer { store: &store, article_of: &article_of }, instances)
        }
        "external" => {
            let endpoint = match (&sa.external_cmd, &sa.external_tcp) {
                (Some(cmd), _) => ExternalEndpoint::Command(cmd.split_whitespace().map(str::to_string).collect()),
                (None, Some(addr)) => ExternalEndpoint::Tcp(addr.clone()),
                (None, None) => match (&ctx.cfg.scorer.command, &ctx.cfg.scorer.tcp) {
                    (Some(cmd), _) => ExternalEndpoint::Command(cmd.clone()),
                    (None, Some(addr)) => ExternalEndpoint::Tcp(addr.clone()),
                    (None, None) => return Err(usage("the external scorer needs --external-cmd or --external-tcp")),
                },
            };
            let timeout = Duration::from_millis(ctx.cfg.scorer.timeout_ms.unwrap_or(30_000));
            let results = external_score(instances, &endpoint, "external", timeout)?;
            let mut records = Vec::with_capacity(results.len());
            let mut failed = 0usize;
            for r in results {
                match r {
                    ExternalResult::Scored(rec) => records.push(rec),
                    ExternalResult::Failed { qa_id, paragraph_index, error } => {
                        log::warn!("{qa_id}:{paragraph_index}: {error}");
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                log::warn!("{lang}: external scorer failed on {failed} of {} instances", instances.len());
            }
            Ok(records)
        }
        other => Err(usage(format!("unknown scorer `{other}`"))),
    }
}

#[derive(Debug, Clone, Args)]
pub(crate) struct ScoreArgs {
    #[command(flatten)]
    langs: LangArgs,
    #[command(flatten)]
    split: SplitSel,
    #[command(flatten)]
    scorer: ScorerArgs,
}

#[derive(Debug, Serialize)]
struct ScoreRow {
    instances: usize,
    scored: usize,
    path: PathBuf,
}

pub(crate) fn score(ctx: &mut Ctx, a: ScoreArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs.langs, ctx.layout.qa_languages()?)?;
    let kind = a.scorer.kind(ctx)?;
    let mut report = BTreeMap::new();
    for lang in langs {
        let instances = load_instances(ctx, &lang, a.split.split)?;
        let records = score_instances(ctx, &a.scorer, &lang, &instances)?;
        let path = ctx.layout.scores(&kind, &lang, a.split.split);
        write_jsonl(&path, &records)?;
        report.insert(
            lang,
            ScoreRow {
                instances: instances.len(),
                scored: records.len(),
                path,
            },
        );
    }
    ctx.emit(&report, || {
        report
            .iter()
            .map(|(l, r)| format!("{l}: {} of {} instances scored -> {}\n", r.scored, r.instances, r.path.display()))
            .collect()
    })
}
