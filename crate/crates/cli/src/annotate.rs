use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;
use silverqa_core::eval::{render_report_table, EvalReport};
use silverqa_core::gold::{
    create_tasks, evaluate_against_gold, kappa_from_table, sample_for_annotation, KappaResult,
};
use silverqa_core::model::{QAPair, Split};
use silverqa_goldserve::{serve_blocking, AppState, GoldStore, DEFAULT_ANNOTATORS_PER_TASK};

use crate::corpus::articles_by_id;
use crate::{usage, Ctx};

#[derive(Debug, Clone, Args)]
pub(crate) struct GoldDir {
    /// Directory holding tasks.jsonl and responses.jsonl (default: <corpus>/gold).
    #[arg(long)]
    gold_dir: Option<PathBuf>,
}

impl GoldDir {
    fn resolve(&self, ctx: &Ctx) -> PathBuf {
        self.gold_dir
            .clone()
            .or_else(|| ctx.cfg.serve.gold_dir.clone())
            .unwrap_or_else(|| ctx.layout.root.join("gold"))
    }
}

#[derive(Debug, Clone, Args)]
pub(crate) struct ServeArgs {
    #[command(flatten)]
    dir: GoldDir,
    /// Listen address (default 127.0.0.1:8080).
    #[arg(long)]
    bind: Option<String>,
    /// Built annotation UI to serve next to the API.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long)]
    annotators_per_task: Option<usize>,
    /// Create tasks from these languages' pairs when the directory has none.
    #[arg(long = "init-lang")]
    init_langs: Vec<String>,
    /// Pairs sampled per language for new tasks.
    #[arg(long, default_value_t = 80)]
    sample: usize,
    /// Split new tasks are sampled from.
    #[arg(long, default_value = "test")]
    split: Split,
}

fn init_tasks(ctx: &Ctx, a: &ServeArgs, dir: &std::path::Path) -> anyhow::Result<usize> {
    let mut tasks = Vec::new();
    for lang in &a.init_langs {
        ctx.registry.get(lang)?;
        let pairs: Vec<QAPair> = ctx
            .layout
            .load_pairs(lang)?
            .into_iter()
            .filter(|p| p.split == a.split)
            .collect();
        let sample = sample_for_annotation(&pairs, a.sample, ctx.cfg.seed());
        let articles = articles_by_id(ctx.layout.load_articles(lang)?);
        let (made, failed) = create_tasks(&sample, &articles);
        for (id, e) in failed {
            log::warn!("no task for {id}: {e}");
        }
        tasks.extend(made);
    }
    std::fs::create_dir_all(dir)?;
    GoldStore::create(dir, &tasks)?;
    Ok(tasks.len())
}

pub(crate) fn serve(ctx: &mut Ctx, a: ServeArgs) -> anyhow::Result<()> {
    let dir = a.dir.resolve(ctx);
    if !GoldStore::tasks_path(&dir).exists() {
        if a.init_langs.is_empty() {
            return Err(usage(format!(
                "{} has no tasks.jsonl; pass --init-lang to create tasks",
                dir.display()
            )));
        }
        let n = init_tasks(ctx, &a, &dir)?;
        log::info!("created {n} tasks in {}", dir.display());
    }
    let per_task = a
        .annotators_per_task
        .or(ctx.cfg.serve.annotators_per_task)
        .unwrap_or(DEFAULT_ANNOTATORS_PER_TASK);
    let store = GoldStore::open(&dir, per_task)?;
    let bind = a
        .bind
        .or_else(|| ctx.cfg.serve.bind.clone())
        .unwrap_or_else(|| "127.0.0.1:8080".into());
    let addr: SocketAddr = bind
        .parse()
        .map_err(|_| usage(format!("bad bind address `{bind}`")))?;
    let static_dir = a.static_dir.or_else(|| ctx.cfg.serve.static_dir.clone());
    serve_blocking(addr, AppState::new(store), static_dir, |bound| {
        eprintln!("serving {} on http://{bound}", dir.display());
    })?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub(crate) struct KappaArgs {
    #[command(flatten)]
    dir: GoldDir,
    /// First annotator id.
    #[arg(long, requires = "b")]
    a: Option<String>,
    /// Second annotator id.
    #[arg(long, requires = "a")]
    b: Option<String>,
    /// Agreement table instead of a response log: both_yes,a_only,b_only,both_no.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    table: Option<String>,
}

#[derive(Debug, Serialize)]
struct KappaReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    common_tasks: Option<usize>,
    #[serde(flatten)]
    result: KappaResult,
}

pub(crate) fn kappa(ctx: &mut Ctx, a: KappaArgs) -> anyhow::Result<()> {
    let report = match (&a.table, &a.a, &a.b) {
        (Some(t), _, _) => {
            let cells: Vec<u64> = t
                .split(',')
                .map(|c| c.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|_| usage(format!("--table wants four counts, got `{t}`")))?;
            let [yy, yn, ny, nn] = cells[..] else {
                return Err(usage(format!("--table wants four counts, got `{t}`")));
            };
            KappaReport {
                common_tasks: None,
                result: kappa_from_table(yy, yn, ny, nn)?,
            }
        }
        (None, Some(x), Some(y)) => {
            let store = GoldStore::open(&a.dir.resolve(ctx), DEFAULT_ANNOTATORS_PER_TASK)?;
            let (result, n) = store.iaa(x, y)?;
            KappaReport {
                common_tasks: Some(n),
                result,
            }
        }
        _ => return Err(usage("pass --a and --b, or --table")),
    };
    ctx.emit(&report, || {
        let k = match report.result.kappa {
            Some(k) => format!("{k:.3}"),
            None => "undefined".into(),
        };
        format!(
            "kappa {k} (p_o {:.3}, p_e {:.3}, {} items{})\n",
            report.result.p_o,
            report.result.p_e,
            report.result.items,
            if report.result.degenerate { ", degenerate" } else { "" }
        )
    })
}

#[derive(Debug, Clone, Args)]
pub(crate) struct DeriveGoldArgs {
    #[command(flatten)]
    dir: GoldDir,
    /// Also score the silver labels against the gold records.
    #[arg(long)]
    evaluate_silver: bool,
}

#[derive(Debug, Serialize)]
struct GoldSummary {
    records: usize,
    usable: usize,
    nota: usize,
    not_understood: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    silver_vs_gold: Vec<EvalReport>,
}

pub(crate) fn derive_gold(ctx: &mut Ctx, a: DeriveGoldArgs) -> anyhow::Result<()> {
    let dir = a.dir.resolve(ctx);
    let store = GoldStore::open(&dir, DEFAULT_ANNOTATORS_PER_TASK)?;
    let gold = store
        .write_gold_snapshot()
        .with_context(|| format!("writing gold snapshot in {}", dir.display()))?;
    let mut summary = GoldSummary {
        records: gold.len(),
        usable: gold.iter().filter(|g| g.is_usable()).count(),
        nota: gold.iter().filter(|g| g.flags.nota).count(),
        not_understood: gold.iter().filter(|g| g.flags.not_understood).count(),
        silver_vs_gold: Vec::new(),
    };
    if a.evaluate_silver {
        let lang_of: HashMap<String, String> = store
            .tasks()
            .into_iter()
            .map(|t| (t.qa_id, t.language))
            .collect();
        let mut by_lang: BTreeMap<String, Vec<_>> = BTreeMap::new();
        for g in &gold {
            if let Some(l) = lang_of.get(&g.qa_id) {
                by_lang.entry(l.clone()).or_default().push(g.clone());
            }
        }
        let mut silver: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for lang in by_lang.keys() {
            for p in ctx.layout.load_pairs(lang)? {
                silver.insert(p.id, p.silver_ids);
            }
        }
        for (lang, records) in &by_lang {
            match evaluate_against_gold(&silver, records, &format!("silver/{lang}")) {
                Ok(r) => summary.silver_vs_gold.push(r),
                Err(e) => log::warn!("{lang}: {e}"),
            }
        }
        if by_lang.len() > 1 {
            summary
                .silver_vs_gold
                .push(evaluate_against_gold(&silver, &gold, "silver/all")?);
        }
    }
    ctx.emit(&summary, || {
        let mut s = format!(
            "{} gold records ({} usable, {} NOTA, {} not understood) -> {}\n",
            summary.records,
            summary.usable,
            summary.nota,
            summary.not_understood,
            GoldStore::gold_path(&dir).display()
        );
        if !summary.silver_vs_gold.is_empty() {
            s += &render_report_table(&summary.silver_vs_gold);
        }
        s
    })
}
