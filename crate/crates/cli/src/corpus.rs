use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::Duration;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use silverqa_core::curation::{
    corpus_stats, extract_qa_pairs, ngram_table, render_ngram_table, split_dataset, NgramRow,
};
use silverqa_core::instances::{build_instances, TrainingInstance};
use silverqa_core::model::{validate_article, Article, CorpusManifest, QAPair, Split};
use silverqa_core::store::{read_jsonl, write_json, write_jsonl};
use silverqa_core::textproc::{SegmenterSet, Tokenizer};
use silverqa_ingest::{
    crawl as run_crawl, extract_article, load_page, ArchiveMode, CrawlConfig, FilePageSink,
    HttpFetcher, PageMeta, SystemClock,
};

use crate::{usage, Ctx, LangArgs};

#[derive(Debug, Clone, Args)]
pub(crate) struct CrawlArgs {
    /// Start URL; repeat for several. Replaces the configured seeds.
    #[arg(long = "seed-url")]
    seed_urls: Vec<String>,
    /// Language recorded on every fetched page.
    #[arg(long)]
    lang: Option<String>,
    #[arg(long)]
    max_pages: Option<usize>,
    /// Minimum gap between two requests to the same host.
    #[arg(long)]
    delay_ms: Option<u64>,
    /// Fetch through the snapshot archive, oldest captures first.
    #[arg(long)]
    archive: bool,
}

pub(crate) fn crawl(ctx: &mut Ctx, a: CrawlArgs) -> anyhow::Result<()> {
    let section = ctx.cfg.crawl.clone();
    let mut cfg = match (&section, a.seed_urls.is_empty()) {
        (_, false) => {
            let mut c = section
                .as_ref()
                .map(|s| s.config.clone())
                .unwrap_or_else(|| CrawlConfig::new(Vec::new()));
            c.seed_urls = a.seed_urls.clone();
            c
        }
        (Some(s), true) => s.config.clone(),
        (None, true) => return Err(usage("no seed URLs: pass --seed-url or set [crawl] seed_urls")),
    };
    if let Some(n) = a.max_pages {
        cfg.max_pages = n;
    }
    if let Some(d) = a.delay_ms {
        cfg.min_delay_ms = d;
    }
    if a.archive {
        cfg.archive_mode = ArchiveMode::EarliestSnapshotFirst;
    }
    cfg.validate()?;
    let lang = a.lang.or_else(|| section.and_then(|s| s.language));
    if let Some(l) = &lang {
        ctx.registry.get(l)?;
    }
    let sink = FilePageSink::open(ctx.layout.clone())?;
    let fetcher = HttpFetcher::new(&cfg.user_agent, Duration::from_millis(cfg.timeout_ms));
    let stats = run_crawl(&cfg, lang.as_deref(), &fetcher, &SystemClock::default(), &sink)?;
    ctx.emit(&stats, || {
        format!(
            "fetched {} pages ({} errors, {} duplicates), skipped {} off-site and {} seen links, {} left in frontier\n",
            stats.fetched,
            stats.errors,
            stats.duplicates,
            stats.skipped_offsite,
            stats.skipped_seen,
            stats.frontier_remaining
        )
    })
}

#[derive(Debug, Clone, Args)]
pub(crate) struct ExtractArgs {
    /// Language for pages crawled without one.
    #[arg(long)]
    lang: Option<String>,
}

#[derive(Debug, Default, Serialize)]
struct ExtractRow {
    pages: usize,
    articles: usize,
    empty: usize,
    failed: usize,
    invalid: usize,
}

pub(crate) fn extract(ctx: &mut Ctx, a: ExtractArgs) -> anyhow::Result<()> {
    let metas: Vec<PageMeta> = read_jsonl(&ctx.layout.pages_meta())?;
    let mut seen = HashSet::new();
    let mut by_lang: BTreeMap<String, Vec<PageMeta>> = BTreeMap::new();
    for m in metas {
        if !m.is_success() || m.duplicate || !seen.insert(m.id.clone()) {
            continue;
        }
        match m.language.clone().or_else(|| a.lang.clone()) {
            Some(l) if ctx.registry.contains(&l) => by_lang.entry(l).or_default().push(m),
            Some(l) => log::warn!("page {} has unknown language `{l}`; skipped", m.url),
            None => log::warn!("page {} has no language; pass --lang", m.url),
        }
    }
    let mut report = BTreeMap::new();
    for (lang, pages) in by_lang {
        let profile = ctx.registry.get(&lang)?;
        let layout = &ctx.layout;
        let results: Vec<anyhow::Result<Option<Article>>> = ctx.pool.install(|| {
            pages
                .par_iter()
                .map(|m| Ok(extract_article(&load_page(layout, m)?, profile)?))
                .collect()
        });
        let mut row = ExtractRow {
            pages: pages.len(),
            ..ExtractRow::default()
        };
        let mut articles = Vec::new();
        for (m, r) in pages.iter().zip(results) {
            match r {
                Ok(Some(article)) => {
                    let check = validate_article(&article, |c| ctx.registry.contains(c));
                    if check.is_valid() {
                        articles.push(article);
                    } else {
                        log::warn!("{}: {:?}", m.url, check.violations);
                        row.invalid += 1;
                    }
                }
                Ok(None) => row.empty += 1,
                Err(e) => {
                    log::warn!("{}: {e:#}", m.url);
                    row.failed += 1;
                }
            }
        }
        row.articles = articles.len();
        write_jsonl(&ctx.layout.articles(&lang), &articles)?;
        report.insert(lang, row);
    }
    ctx.emit(&report, || {
        let mut s = String::new();
        for (l, r) in &report {
            s += &format!(
                "{l}: {} articles from {} pages ({} empty, {} failed, {} invalid)\n",
                r.articles, r.pages, r.empty, r.failed, r.invalid
            );
        }
        s
    })
}

#[derive(Debug, Serialize)]
struct CurateRow {
    articles: usize,
    qa_pairs: usize,
}

pub(crate) fn curate(ctx: &mut Ctx, a: LangArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs, ctx.layout.article_languages()?)?;
    let mut report = BTreeMap::new();
    for lang in langs {
        let profile = ctx.registry.get(&lang)?;
        let articles = ctx.layout.load_articles(&lang)?;
        let pairs: Vec<QAPair> = ctx.pool.install(|| {
            articles
                .par_iter()
                .flat_map_iter(|art| extract_qa_pairs(art, profile))
                .collect()
        });
        write_jsonl(&ctx.layout.qa(&lang), &pairs)?;
        report.insert(
            lang,
            CurateRow {
                articles: articles.len(),
                qa_pairs: pairs.len(),
            },
        );
    }
    ctx.emit(&report, || {
        report
            .iter()
            .map(|(l, r)| format!("{l}: {} pairs from {} articles\n", r.qa_pairs, r.articles))
            .collect()
    })
}

#[derive(Debug, Clone, Args)]
pub(crate) struct SplitArgs {
    #[command(flatten)]
    langs: LangArgs,
    #[arg(long)]
    seed: Option<u64>,
}

/// Re-assigns splits from scratch, per language, and rewrites the manifest.
pub(crate) fn split(ctx: &mut Ctx, a: SplitArgs) -> anyhow::Result<()> {
    let seed = a.seed.unwrap_or_else(|| ctx.cfg.seed());
    let ratios = ctx.cfg.split_ratios()?;
    let langs = ctx.languages(&a.langs.langs, ctx.layout.qa_languages()?)?;
    for lang in &langs {
        let mut pairs = ctx.layout.load_pairs(lang)?;
        for p in pairs.iter_mut() {
            p.split = Split::Unassigned;
        }
        split_dataset(&mut pairs, ratios, seed)?;
        write_jsonl(&ctx.layout.qa(lang), &pairs)?;
    }
    let mut all_articles = Vec::new();
    let mut all_pairs = Vec::new();
    for lang in ctx.layout.qa_languages()? {
        all_pairs.extend(ctx.layout.load_pairs(&lang)?);
        if ctx.layout.articles(&lang).exists() {
            all_articles.extend(ctx.layout.load_articles(&lang)?);
        }
    }
    let manifest = CorpusManifest::from_records(&all_articles, &all_pairs, ratios.as_array(), seed);
    write_json(&ctx.layout.manifest(), &manifest)?;
    ctx.emit(&manifest, || {
        let mut s = format!("seed {seed}, {} pairs\n", manifest.qa_count);
        for (k, v) in &manifest.split_counts {
            s += &format!("  {k}: {v}\n");
        }
        s
    })
}

pub(crate) fn stats(ctx: &mut Ctx, a: LangArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs, ctx.layout.qa_languages()?)?;
    let mut articles = Vec::new();
    let mut pairs = Vec::new();
    for lang in &langs {
        articles.extend(ctx.layout.load_articles(lang)?);
        pairs.extend(ctx.layout.load_pairs(lang)?);
    }
    let tokenizer = ctx.tokenizer()?;
    let segmenters = SegmenterSet::from_registry(&ctx.registry);
    let report = corpus_stats(&articles, &pairs, &tokenizer, &segmenters)?;
    ctx.emit(&report, || report.render_text())
}

#[derive(Debug, Clone, Args)]
pub(crate) struct NgramArgs {
    #[command(flatten)]
    langs: LangArgs,
    /// n-gram order.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Rows per language.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

pub(crate) fn ngrams(ctx: &mut Ctx, a: NgramArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs.langs, ctx.layout.qa_languages()?)?;
    let tokenizer = ctx.tokenizer()?;
    let mut tables: BTreeMap<String, Vec<NgramRow>> = BTreeMap::new();
    for lang in langs {
        let questions: Vec<String> = ctx
            .layout
            .load_pairs(&lang)?
            .into_iter()
            .map(|p| p.question)
            .collect();
        let mut rows = ngram_table(&questions, a.n, &tokenizer)?;
        rows.truncate(a.top);
        tables.insert(lang, rows);
    }
    ctx.emit(&tables, || {
        tables
            .iter()
            .map(|(l, rows)| format!("# {l}\n{}", render_ngram_table(rows)))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

#[derive(Debug, Clone, Args)]
pub(crate) struct BuildArgs {
    #[command(flatten)]
    langs: LangArgs,
    /// Only this split (default: every split that has pairs).
    #[arg(long)]
    split: Option<Split>,
}

#[derive(Debug, Default, Serialize)]
struct BuildRow {
    pairs: usize,
    instances: usize,
    positives: usize,
    truncated: usize,
}

pub(crate) fn articles_by_id(articles: Vec<Article>) -> HashMap<String, Article> {
    articles.into_iter().map(|a| (a.id.clone(), a)).collect()
}

/// Instances of `pairs` in pair order, built in parallel.
pub(crate) fn instances_for(
    ctx: &Ctx,
    pairs: &[&QAPair],
    articles: &HashMap<String, Article>,
    tokenizer: &Tokenizer,
) -> anyhow::Result<Vec<TrainingInstance>> {
    let opts = &ctx.cfg.instances;
    let nested: Vec<anyhow::Result<Vec<TrainingInstance>>> = ctx.pool.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                let article = articles.get(&p.article_id).ok_or_else(|| {
                    anyhow::anyhow!("pair {} refers to missing article {}", p.id, p.article_id)
                })?;
                Ok(build_instances(p, article, opts, tokenizer)?)
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in nested {
        out.extend(r?);
    }
    Ok(out)
}

/// Stored instances for (lang, split), or freshly built ones when none have
/// been written yet.
pub(crate) fn load_instances(ctx: &Ctx, lang: &str, split: Split) -> anyhow::Result<Vec<TrainingInstance>> {
    let path = ctx.layout.instances(lang, split);
    if path.exists() {
        return Ok(read_jsonl(&path)?);
    }
    log::info!("{} missing; building instances in memory", path.display());
    let pairs = ctx.layout.load_pairs(lang)?;
    let selected: Vec<&QAPair> = pairs.iter().filter(|p| p.split == split).collect();
    let articles = articles_by_id(ctx.layout.load_articles(lang)?);
    instances_for(ctx, &selected, &articles, &ctx.tokenizer()?)
}

pub(crate) fn build(ctx: &mut Ctx, a: BuildArgs) -> anyhow::Result<()> {
    let langs = ctx.languages(&a.langs.langs, ctx.layout.qa_languages()?)?;
    let tokenizer = ctx.tokenizer()?;
    let mut report: BTreeMap<String, BTreeMap<&'static str, BuildRow>> = BTreeMap::new();
    for lang in langs {
        let pairs = ctx.layout.load_pairs(&lang)?;
        let articles = articles_by_id(ctx.layout.load_articles(&lang)?);
        let splits: Vec<Split> = match a.split {
            Some(s) => vec![s],
            None => {
                let mut present: Vec<Split> = pairs.iter().map(|p| p.split).collect();
                present.sort();
                present.dedup();
                present
            }
        };
        for split in splits {
            let selected: Vec<&QAPair> = pairs.iter().filter(|p| p.split == split).collect();
            if selected.is_empty() {
                log::warn!("{lang}: no pairs in split {}", split.as_str());
            }
            let instances = instances_for(ctx, &selected, &articles, &tokenizer)?;
            write_jsonl(&ctx.layout.instances(&lang, split), &instances)?;
            report.entry(lang.clone()).or_default().insert(
                split.as_str(),
                BuildRow {
                    pairs: selected.len(),
                    instances: instances.len(),
                    positives: instances.iter().filter(|i| i.label == 1).count(),
                    truncated: instances.iter().filter(|i| i.truncated).count(),
                },
            );
        }
    }
    ctx.emit(&report, || {
        let mut s = String::new();
        for (l, rows) in &report {
            for (split, r) in rows {
                s += &format!(
                    "{l} {split}: {} instances from {} pairs ({} positive, {} truncated)\n",
                    r.instances, r.pairs, r.positives, r.truncated
                );
            }
        }
        s
    })
}

