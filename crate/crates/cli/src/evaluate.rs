use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;
use silverqa_core::eval::{
    align_labels, evaluate as evaluate_records, per_language_report, reduce_with_scores,
    render_language_table, render_report_table, render_sweep_csv, threshold_grid,
    threshold_sweep, win_ratio as win_ratio_of, AverageKind, LanguageScores, ReducedContext,
    ReductionPolicy, WinRatioReport,
};
use silverqa_core::instances::TrainingInstance;
use silverqa_core::model::QAPair;
use silverqa_core::scorers::ScoreRecord;
use silverqa_core::store::{read_jsonl, write_jsonl};

use crate::config::Threshold;
use crate::corpus::{articles_by_id, load_instances};
use crate::modeling::{score_instances, ScorerArgs};
use crate::{usage, Ctx, LangArgs, SplitSel};

#[derive(Debug, Clone, Args)]
pub(crate) struct Source {
    #[command(flatten)]
    langs: LangArgs,
    #[command(flatten)]
    split: SplitSel,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Precomputed score records (JSONL) instead of scoring now; needs a
    /// single --lang.
    #[arg(long)]
    scores: Option<PathBuf>,
}

/// Score records and aligned labels per language.
fn scored(ctx: &Ctx, src: &Source) -> anyhow::Result<Vec<LanguageScores>> {
    let langs = ctx.languages(&src.langs.langs, ctx.layout.qa_languages()?)?;
    if src.scores.is_some() && langs.len() != 1 {
        return Err(usage("--scores needs exactly one --lang"));
    }
    let mut out = Vec::new();
    for lang in langs {
        let instances = load_instances(ctx, &lang, src.split.split)?;
        let records: Vec<ScoreRecord> = match &src.scores {
            Some(path) => read_jsonl(path)?,
            None => score_instances(ctx, &src.scorer, &lang, &instances)?,
        };
        let labels = align_labels(&records, &instances)?;
        out.push(LanguageScores {
            language: lang,
            records,
            labels,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub(crate) struct EvaluateArgs {
    #[command(flatten)]
    source: Source,
    /// Decision threshold: `default` (midpoint of the score range) or a number.
    #[arg(long, value_parser = Threshold::parse)]
    threshold: Option<Threshold>,
    /// Weight the cross-language average by question count.
    #[arg(long)]
    weighted: bool,
}

pub(crate) fn evaluate(ctx: &mut Ctx, a: EvaluateArgs) -> anyhow::Result<()> {
    let threshold = a
        .threshold
        .or(ctx.cfg.threshold)
        .unwrap_or(Threshold::Default)
        .value();
    let groups = scored(ctx, &a.source)?;
    if let [one] = groups.as_slice() {
        let report = evaluate_records(&one.records, &one.labels, threshold)?;
        return ctx.emit(&report, || render_report_table(std::slice::from_ref(&report)));
    }
    let thresholds: BTreeMap<String, f64> = match threshold {
        Some(t) => groups.iter().map(|g| (g.language.clone(), t)).collect(),
        None => BTreeMap::new(),
    };
    let kind = if a.weighted {
        AverageKind::QuestionWeighted
    } else {
        AverageKind::Unweighted
    };
    let table = per_language_report(&groups, &thresholds, kind)?;
    ctx.emit(&table, || render_language_table(&table))
}

#[derive(Debug, Clone, Args)]
pub(crate) struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Grid intervals between the ends of the score range.
    #[arg(long)]
    steps: Option<usize>,
}

/// One sweep over the pooled instances of every selected language.
pub(crate) fn sweep(ctx: &mut Ctx, a: SweepArgs) -> anyhow::Result<()> {
    let groups = scored(ctx, &a.source)?;
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for g in groups {
        records.extend(g.records);
        labels.extend(g.labels);
    }
    let range = records
        .first()
        .map(|r| r.score_range)
        .ok_or_else(|| anyhow::anyhow!("nothing to sweep"))?;
    let grid = threshold_grid(range, a.steps.unwrap_or(ctx.cfg.sweep.steps))?;
    let report = threshold_sweep(&records, &labels, &grid)?;
    if let Some(best) = report.best_macro_f1() {
        log::info!(
            "best macro F1 {:.4} at threshold {}",
            best.report.metrics.macro_f1,
            best.threshold
        );
    }
    if ctx.json {
        return ctx.emit(&report, String::new);
    }
    let csv = render_sweep_csv(&report)?;
    ctx.write_raw(&csv)
}

#[derive(Debug, Clone, Args)]
pub(crate) struct ReduceArgs {
    #[command(flatten)]
    langs: LangArgs,
    #[command(flatten)]
    split: SplitSel,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Keep the k best paragraphs.
    #[arg(long, conflicts_with = "min_score")]
    top_k: Option<usize>,
    /// Keep paragraphs scoring at least this much.
    #[arg(long)]
    min_score: Option<f64>,
    /// Write reduced contexts here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize)]
struct ReduceRow {
    questions: usize,
    paragraphs_before: usize,
    paragraphs_after: usize,
}

pub(crate) fn reduce(ctx: &mut Ctx, a: ReduceArgs) -> anyhow::Result<()> {
    let policy = match (a.top_k, a.min_score, ctx.cfg.reduce) {
        (Some(k), _, _) => ReductionPolicy::TopK(k),
        (None, Some(t), _) => ReductionPolicy::AboveThreshold(t),
        (None, None, Some(p)) => p,
        (None, None, None) => return Err(usage("choose --top-k or --min-score (or set [reduce])")),
    };
    let langs = ctx.languages(&a.langs.langs, ctx.layout.qa_languages()?)?;
    let mut contexts: Vec<ReducedContext> = Vec::new();
    let mut report = BTreeMap::new();
    for lang in langs {
        let pairs: Vec<QAPair> = ctx
            .layout
            .load_pairs(&lang)?
            .into_iter()
            .filter(|p| p.split == a.split.split)
            .collect();
        let articles = articles_by_id(ctx.layout.load_articles(&lang)?);
        let instances: Vec<TrainingInstance> = load_instances(ctx, &lang, a.split.split)?;
        let records = score_instances(ctx, &a.scorer, &lang, &instances)?;
        let mut by_question: HashMap<&str, Vec<(usize, f64)>> = HashMap::new();
        for r in &records {
            by_question
                .entry(r.qa_id.as_str())
                .or_default()
                .push((r.paragraph_index, r.score));
        }
        let mut row = ReduceRow::default();
        for p in &pairs {
            let Some(scores) = by_question.get(p.id.as_str()) else {
                log::warn!("{}: no scores; skipped", p.id);
                continue;
            };
            let article = articles
                .get(&p.article_id)
                .with_context(|| format!("article {} of {} not found", p.article_id, p.id))?;
            let reduced = reduce_with_scores(p, article, scores, policy)?;
            row.questions += 1;
            row.paragraphs_before += p.context_paragraph_ids.len();
            row.paragraphs_after += reduced.paragraph_ids.len();
            contexts.push(reduced);
        }
        report.insert(lang, row);
    }
    match &a.out {
        Some(path) => {
            write_jsonl(path, &contexts)?;
            ctx.emit(&report, || {
                report
                    .iter()
                    .map(|(l, r)| {
                        format!(
                            "{l}: {} questions, {} -> {} paragraphs\n",
                            r.questions, r.paragraphs_before, r.paragraphs_after
                        )
                    })
                    .collect()
            })
        }
        None => {
            let mut s = String::new();
            for c in &contexts {
                s += &serde_json::to_string(c)?;
                s.push('\n');
            }
            ctx.write_raw(&s)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub(crate) struct WinRatioArgs {
    /// Generations with full context, one per line.
    #[arg(long)]
    generations: PathBuf,
    /// Gold answers, one per line, aligned with the generations.
    #[arg(long)]
    answers: PathBuf,
    /// Generations with reduced context, aligned likewise.
    #[arg(long)]
    reduced: Option<PathBuf>,
}

fn lines(path: &PathBuf) -> anyhow::Result<Vec<String>> {
    let src = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(src.lines().map(str::to_string).collect())
}

pub(crate) fn win_ratio(ctx: &mut Ctx, a: WinRatioArgs) -> anyhow::Result<()> {
    let answers = lines(&a.answers)?;
    let full = win_ratio_of(&lines(&a.generations)?, &answers)?;
    let reduced = match &a.reduced {
        Some(p) => Some(win_ratio_of(&lines(p)?, &answers)?),
        None => None,
    };
    let report = WinRatioReport {
        count: answers.len(),
        full_context: full,
        reduced_context: reduced,
    };
    ctx.emit(&report, || report.render_text())
}
