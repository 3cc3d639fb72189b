//! Human gold annotations: tasks, verdicts, union gold and Cohen's kappa.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{evaluate_predictions, EvalReport};
use crate::model::{Article, QAPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    #[default]
    Open,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskParagraph {
    pub index: usize,
    pub text: String,
}

/// What an annotator sees. Silver labels are deliberately not part of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationTask {
    pub task_id: String,
    pub qa_id: String,
    pub language: String,
    pub title: String,
    pub question: String,
    pub paragraphs: Vec<TaskParagraph>,
    #[serde(default)]
    pub status: TaskStatus,
}

impl AnnotationTask {
    pub fn paragraph_indices(&self) -> BTreeSet<usize> {
        self.paragraphs.iter().map(|p| p.index).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Selections { paragraphs: BTreeSet<usize> },
    Nota,
    NotUnderstood,
}

impl Verdict {
    /// Selected paragraphs; empty for the two opt-out verdicts.
    pub fn selected(&self) -> BTreeSet<usize> {
        match self {
            Verdict::Selections { paragraphs } => paragraphs.clone(),
            _ => BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationResponse {
    pub task_id: String,
    pub annotator_id: String,
    pub verdict: Verdict,
    pub submitted_at: DateTime<Utc>,
}

/// Checks a response against its task.
pub fn validate_response(task: &AnnotationTask, resp: &AnnotationResponse) -> Result<()> {
    if resp.task_id != task.task_id {
        return Err(Error::invalid(format!(
            "response for `{}` submitted to task `{}`",
            resp.task_id, task.task_id
        )));
    }
    if resp.annotator_id.trim().is_empty() {
        return Err(Error::invalid("annotator id is empty"));
    }
    if let Verdict::Selections { paragraphs } = &resp.verdict {
        if paragraphs.is_empty() {
            return Err(Error::invalid("a selection verdict must select at least one paragraph"));
        }
        let known = task.paragraph_indices();
        if let Some(bad) = paragraphs.iter().find(|i| !known.contains(i)) {
            return Err(Error::invalid(format!(
                "paragraph {bad} is not part of task `{}`",
                task.task_id
            )));
        }
    }
    Ok(())
}

/// Up to `n` pairs chosen by a seeded hash of their ids, in hash order.
/// The choice of a pair does not depend on the other pairs present.
pub fn sample_for_annotation(pairs: &[QAPair], n: usize, seed: u64) -> Vec<QAPair> {
    let mut keyed: Vec<([u8; 32], &QAPair)> = pairs
        .iter()
        .map(|p| {
            let mut h = Sha256::new();
            h.update(seed.to_le_bytes());
            h.update(p.id.as_bytes());
            (h.finalize().into(), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    keyed.into_iter().take(n).map(|(_, p)| p.clone()).collect()
}

/// One task per pair, paragraphs taken from the pair's context in order.
/// Pairs whose article is missing are returned as errors alongside.
pub fn create_tasks(
    sample: &[QAPair],
    articles: &HashMap<String, Article>,
) -> (Vec<AnnotationTask>, Vec<(String, Error)>) {
    let mut tasks = Vec::with_capacity(sample.len());
    let mut failed = Vec::new();
    for pair in sample {
        match task_for(pair, articles.get(&pair.article_id)) {
            Ok(t) => tasks.push(t),
            Err(e) => failed.push((pair.id.clone(), e)),
        }
    }
    (tasks, failed)
}

fn task_for(pair: &QAPair, article: Option<&Article>) -> Result<AnnotationTask> {
    let article = article.ok_or_else(|| {
        Error::invalid(format!("article {} of pair {} not found", pair.article_id, pair.id))
    })?;
    let texts = article.paragraphs();
    let paragraphs = pair
        .context_paragraph_ids
        .iter()
        .map(|&i| {
            texts
                .get(i)
                .map(|t| TaskParagraph { index: i, text: (*t).to_string() })
                .ok_or_else(|| Error::invalid(format!("pair {} references missing paragraph {i}", pair.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnotationTask {
        task_id: pair.id.clone(),
        qa_id: pair.id.clone(),
        language: article.language.clone(),
        title: article.title.clone(),
        question: pair.question.clone(),
        paragraphs,
        status: TaskStatus::Open,
    })
}

/// Latest response per (task, annotator), replaying a log in order.
pub fn latest_responses<'a>(
    log: impl IntoIterator<Item = &'a AnnotationResponse>,
) -> BTreeMap<(String, String), AnnotationResponse> {
    let mut out = BTreeMap::new();
    for r in log {
        out.insert((r.task_id.clone(), r.annotator_id.clone()), r.clone());
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFlags {
    pub nota: bool,
    pub not_understood: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub qa_id: String,
    pub gold_ids: BTreeSet<usize>,
    pub annotators: usize,
    pub flags: GoldFlags,
    /// Number of paragraphs the annotators saw.
    #[serde(default)]
    pub paragraph_count: usize,
}

impl GoldRecord {
    /// Records without any selected paragraph cannot serve as a reference.
    pub fn is_usable(&self) -> bool {
        !self.gold_ids.is_empty()
    }
}

/// Union of all selections for one question.
pub fn derive_gold(
    qa_id: &str,
    paragraph_count: usize,
    responses: &[AnnotationResponse],
) -> Result<GoldRecord> {
    if responses.is_empty() {
        return Err(Error::invalid(format!("no responses for {qa_id}")));
    }
    let mut gold_ids = BTreeSet::new();
    let mut flags = GoldFlags::default();
    let mut annotators = BTreeSet::new();
    for r in responses {
        annotators.insert(r.annotator_id.as_str());
        match &r.verdict {
            Verdict::Selections { paragraphs } => gold_ids.extend(paragraphs.iter().copied()),
            Verdict::Nota => flags.nota = true,
            Verdict::NotUnderstood => flags.not_understood = true,
        }
    }
    Ok(GoldRecord {
        qa_id: qa_id.to_string(),
        gold_ids,
        annotators: annotators.len(),
        flags,
        paragraph_count,
    })
}

/// Gold records for every task with at least one response, in task order.
pub fn derive_all_gold(tasks: &[AnnotationTask], log: &[AnnotationResponse]) -> Vec<GoldRecord> {
    let latest = latest_responses(log);
    let mut by_task: HashMap<&str, Vec<AnnotationResponse>> = HashMap::new();
    for ((task, _), r) in &latest {
        by_task.entry(task.as_str()).or_default().push(r.clone());
    }
    tasks
        .iter()
        .filter_map(|t| {
            let rs = by_task.get(t.task_id.as_str())?;
            derive_gold(&t.qa_id, t.paragraphs.len(), rs).ok()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub p_o: f64,
    pub p_e: f64,
    /// `None` when chance agreement is total but observed agreement is not.
    pub kappa: Option<f64>,
    pub items: usize,
    pub degenerate: bool,
}

/// 2×2 agreement table: `[[both 1, A 1 B 0], [A 0 B 1, both 0]]`.
pub fn kappa_from_table(both_yes: u64, a_only: u64, b_only: u64, both_no: u64) -> Result<KappaResult> {
    let n = both_yes + a_only + b_only + both_no;
    if n == 0 {
        return Err(Error::invalid("kappa needs at least one item"));
    }
    let nf = n as f64;
    let p_o = (both_yes + both_no) as f64 / nf;
    let a1 = (both_yes + a_only) as f64;
    let b1 = (both_yes + b_only) as f64;
    let p_e = (a1 * b1 + (nf - a1) * (nf - b1)) / (nf * nf);
    let (kappa, degenerate) = if p_e >= 1.0 {
        if p_o >= 1.0 {
            (Some(1.0), false)
        } else {
            (None, true)
        }
    } else if p_o >= 1.0 {
        (Some(1.0), false)
    } else {
        (Some(((p_o - p_e) / (1.0 - p_e)).clamp(-1.0, 1.0)), false)
    };
    Ok(KappaResult {
        p_o,
        p_e,
        kappa,
        items: n as usize,
        degenerate,
    })
}

/// Agreement over every (task, paragraph) decision. Both annotators must
/// have a selection set for each task.
pub fn cohen_kappa(
    a: &BTreeMap<String, BTreeSet<usize>>,
    b: &BTreeMap<String, BTreeSet<usize>>,
    tasks: &[AnnotationTask],
) -> Result<KappaResult> {
    let (mut yy, mut yn, mut ny, mut nn) = (0u64, 0u64, 0u64, 0u64);
    for t in tasks {
        let (sa, sb) = match (a.get(&t.task_id), b.get(&t.task_id)) {
            (Some(sa), Some(sb)) => (sa, sb),
            _ => {
                return Err(Error::invalid(format!(
                    "both annotators must answer task `{}`",
                    t.task_id
                )))
            }
        };
        for p in &t.paragraphs {
            match (sa.contains(&p.index), sb.contains(&p.index)) {
                (true, true) => yy += 1,
                (true, false) => yn += 1,
                (false, true) => ny += 1,
                (false, false) => nn += 1,
            }
        }
    }
    kappa_from_table(yy, yn, ny, nn)
}

/// Selected paragraphs per task id.
pub type Selections = BTreeMap<String, BTreeSet<usize>>;

/// Tasks both annotators answered, and each one's selection sets over them.
pub fn common_selections(
    latest: &BTreeMap<(String, String), AnnotationResponse>,
    a: &str,
    b: &str,
) -> (BTreeSet<String>, Selections, Selections) {
    let of = |who: &str| -> Selections {
        latest
            .iter()
            .filter(|((_, ann), _)| ann == who)
            .map(|((task, _), r)| (task.clone(), r.verdict.selected()))
            .collect()
    };
    let (sa, sb) = (of(a), of(b));
    let common = sa.keys().filter(|k| sb.contains_key(*k)).cloned().collect();
    (common, sa, sb)
}

/// Scores a candidate labeling (silver sets or model predictions, keyed by
/// QA id) against usable gold records.
pub fn evaluate_against_gold(
    candidate: &BTreeMap<String, BTreeSet<usize>>,
    gold: &[GoldRecord],
    candidate_name: &str,
) -> Result<EvalReport> {
    let usable: Vec<&GoldRecord> = gold.iter().filter(|g| g.is_usable()).collect();
    if usable.is_empty() {
        return Err(Error::invalid("every gold record is flagged or empty"));
    }
    let skipped = gold.len() - usable.len();
    if skipped > 0 {
        log::info!("{skipped} gold records without selections excluded");
    }
    let mut items = Vec::new();
    let mut predictions = Vec::new();
    let mut labels = Vec::new();
    for g in usable {
        let cand = candidate
            .get(&g.qa_id)
            .ok_or_else(|| Error::invalid(format!("no candidate labeling for {}", g.qa_id)))?;
        let count = g
            .paragraph_count
            .max(g.gold_ids.iter().max().map_or(0, |m| m + 1));
        for i in 0..count {
            items.push((g.qa_id.clone(), i));
            predictions.push(u8::from(cand.contains(&i)));
            labels.push(u8::from(g.gold_ids.contains(&i)));
        }
    }
    evaluate_predictions(&items, &predictions, &labels, candidate_name)
}
