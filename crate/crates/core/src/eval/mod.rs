//! Binarization, pooled classification metrics, Success Rate, threshold
//! sweeps and per-language tables.

mod reduce;
mod render;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{instance_key, TrainingInstance};
use crate::scorers::{default_threshold, ScoreRange, ScoreRecord};

pub use reduce::{
    normalize_for_match, reduce_context, reduce_with_scores, select_paragraphs, win_ratio,
    ReducedContext, ReductionPolicy, WinRatioReport,
};
pub use render::{render_language_table, render_report_table, render_sweep_csv};

/// Confusion counts with label 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, prediction: u8, label: u8) {
        match (prediction, label) {
            (1, 1) => self.tp += 1,
            (1, _) => self.fp += 1,
            (_, 1) => self.fn_ += 1,
            _ => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_positive(&self) -> u64 {
        self.tp + self.fp
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl LabelMetrics {
    fn from_counts(hit: u64, false_pos: u64, false_neg: u64) -> Self {
        Self {
            precision: ratio(hit, hit + false_pos),
            recall: ratio(hit, hit + false_neg),
            f1: ratio(2 * hit, 2 * hit + false_pos + false_neg),
        }
    }
}

/// The headline numbers of a report, also used for averaged rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub label0: LabelMetrics,
    pub label1: LabelMetrics,
    /// Absent when the report was computed without per-question structure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
}

impl Metrics {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let label0 = LabelMetrics::from_counts(c.tn, c.fn_, c.fp);
        let label1 = LabelMetrics::from_counts(c.tp, c.fp, c.fn_);
        Self {
            accuracy: ratio(c.tp + c.tn, c.total()),
            macro_f1: (label0.f1 + label1.f1) / 2.0,
            label0,
            label1,
            success_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub threshold: Option<f64>,
    pub instances: usize,
    pub questions: usize,
    pub counts: ConfusionCounts,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Predictions are 1 iff `score >= threshold`.
pub fn binarize(scores: &[ScoreRecord], threshold: f64) -> Result<Vec<u8>> {
    scores
        .iter()
        .map(|r| {
            if !r.score_range.contains(threshold) {
                return Err(Error::invalid(format!(
                    "threshold {threshold} outside the {} range [{}, {}]",
                    r.scorer, r.score_range.0, r.score_range.1
                )));
            }
            if r.score.is_nan() {
                return Err(Error::invalid(format!(
                    "NaN score for {}",
                    instance_key(&r.qa_id, r.paragraph_index)
                )));
            }
            Ok(u8::from(r.score >= threshold))
        })
        .collect()
}

/// Pooled metrics over all instances; Success Rate is left unset.
pub fn classification_report(predictions: &[u8], labels: &[u8]) -> Result<EvalReport> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    if let Some(v) = predictions.iter().chain(labels).find(|v| **v > 1) {
        return Err(Error::invalid(format!("value {v} is not a binary label")));
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        counts.add(p, y);
    }
    Ok(EvalReport {
        scorer: String::new(),
        threshold: None,
        instances: predictions.len(),
        questions: 0,
        counts,
        metrics: Metrics::from_counts(&counts),
    })
}

/// Fraction of questions whose predicted-positive set meets the reference set.
pub fn success_rate(predicted: &[BTreeSet<usize>], reference: &[BTreeSet<usize>]) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(Error::invalid(format!(
            "{} predicted sets for {} reference sets",
            predicted.len(),
            reference.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::invalid("no questions to evaluate"));
    }
    if reference.iter().any(BTreeSet::is_empty) {
        return Err(Error::invalid("a question has an empty reference set"));
    }
    let hits = predicted
        .iter()
        .zip(reference)
        .filter(|(p, r)| !p.is_disjoint(r))
        .count();
    Ok(hits as f64 / reference.len() as f64)
}

/// Labels aligned with `records`, looked up by instance key.
pub fn align_labels(records: &[ScoreRecord], instances: &[TrainingInstance]) -> Result<Vec<u8>> {
    let by_key: HashMap<String, u8> = instances.iter().map(|i| (i.key(), i.label)).collect();
    records
        .iter()
        .map(|r| {
            let key = instance_key(&r.qa_id, r.paragraph_index);
            by_key
                .get(&key)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no labeled instance for score {key}")))
        })
        .collect()
}

/// Common score range and scorer id of a batch of records.
fn batch_identity(records: &[ScoreRecord]) -> Result<(ScoreRange, String)> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("nothing to evaluate"))?;
    if let Some(r) = records.iter().find(|r| r.score_range != first.score_range) {
        return Err(Error::invalid(format!(
            "mixed score ranges in one evaluation: [{}, {}] and [{}, {}]",
            first.score_range.0, first.score_range.1, r.score_range.0, r.score_range.1
        )));
    }
    let scorer = if records.iter().all(|r| r.scorer == first.scorer) {
        first.scorer.clone()
    } else {
        "mixed".to_string()
    };
    Ok((first.score_range, scorer))
}

/// Per-question (predicted, reference) sets, in first-appearance order.
fn question_sets(
    records: &[ScoreRecord],
    predictions: &[u8],
    labels: &[u8],
) -> (Vec<BTreeSet<usize>>, Vec<BTreeSet<usize>>) {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut predicted = Vec::new();
    let mut reference = Vec::new();
    for ((r, &p), &y) in records.iter().zip(predictions).zip(labels) {
        let i = *slot.entry(r.qa_id.as_str()).or_insert_with(|| {
            predicted.push(BTreeSet::new());
            reference.push(BTreeSet::new());
            predicted.len() - 1
        });
        if p == 1 {
            predicted[i].insert(r.paragraph_index);
        }
        if y == 1 {
            reference[i].insert(r.paragraph_index);
        }
    }
    (predicted, reference)
}

fn report_from_predictions(
    records: &[ScoreRecord],
    predictions: &[u8],
    labels: &[u8],
    scorer: &str,
    threshold: Option<f64>,
) -> Result<EvalReport> {
    let mut report = classification_report(predictions, labels)?;
    let (predicted, reference) = question_sets(records, predictions, labels);
    report.metrics.success_rate = Some(success_rate(&predicted, &reference)?);
    report.questions = reference.len();
    report.scorer = scorer.to_string();
    report.threshold = threshold;
    Ok(report)
}

/// Full report for scored instances. `threshold = None` uses the midpoint of
/// the records' score range.
pub fn evaluate(records: &[ScoreRecord], labels: &[u8], threshold: Option<f64>) -> Result<EvalReport> {
    if records.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} labels",
            records.len(),
            labels.len()
        )));
    }
    let (range, scorer) = batch_identity(records)?;
    let t = match threshold {
        Some(t) => t,
        None => default_threshold(range)?,
    };
    let predictions = binarize(records, t)?;
    report_from_predictions(records, &predictions, labels, &scorer, Some(t))
}

/// Report for a fixed 0/1 labeling (silver sets or thresholded predictions
/// produced elsewhere) against reference labels.
pub fn evaluate_predictions(
    items: &[(String, usize)],
    predictions: &[u8],
    labels: &[u8],
    scorer: &str,
) -> Result<EvalReport> {
    if items.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "{} items for {} predictions",
            items.len(),
            predictions.len()
        )));
    }
    let records: Vec<ScoreRecord> = items
        .iter()
        .zip(predictions)
        .map(|((qa_id, idx), &p)| ScoreRecord {
            qa_id: qa_id.clone(),
            paragraph_index: *idx,
            score: f64::from(p),
            scorer: scorer.to_string(),
            score_range: ScoreRange::UNIT,
        })
        .collect();
    report_from_predictions(&records, predictions, labels, scorer, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scorer: String,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    /// The point with the highest macro F1; the lowest threshold wins ties.
    pub fn best_macro_f1(&self) -> Option<&SweepPoint> {
        self.points.iter().fold(None, |best: Option<&SweepPoint>, p| match best {
            Some(b) if b.report.metrics.macro_f1 >= p.report.metrics.macro_f1 => Some(b),
            _ => Some(p),
        })
    }
}

/// `steps + 1` evenly spaced thresholds from `lo` to `hi` inclusive.
pub fn threshold_grid(range: ScoreRange, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::invalid("a threshold grid needs at least one step"));
    }
    default_threshold(range)?;
    let (lo, hi) = (range.0, range.1);
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / steps as f64
            }
        })
        .collect())
}

/// One report per threshold. The grid is sorted and deduplicated first, so
/// thresholds in the result are strictly increasing.
pub fn threshold_sweep(records: &[ScoreRecord], labels: &[u8], grid: &[f64]) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::invalid("empty threshold grid"));
    }
    if grid.iter().any(|t| t.is_nan()) {
        return Err(Error::invalid("NaN threshold in grid"));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (_, scorer) = batch_identity(records)?;
    let points = grid
        .into_iter()
        .map(|t| {
            Ok(SweepPoint {
                threshold: t,
                report: evaluate(records, labels, Some(t))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { scorer, points })
}

/// How the summary row of a per-language table is averaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageKind {
    #[default]
    Unweighted,
    QuestionWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageTable {
    pub rows: BTreeMap<String, EvalReport>,
    pub average: Metrics,
    pub average_kind: AverageKind,
    /// Cohen's kappa per language, when annotator agreement is known.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub iaa: BTreeMap<String, f64>,
}

/// Scored and labeled instances of one language.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageScores {
    pub language: String,
    pub records: Vec<ScoreRecord>,
    pub labels: Vec<u8>,
}

/// One report per language plus an averaged row. `thresholds` overrides the
/// default threshold per language.
pub fn per_language_report(
    groups: &[LanguageScores],
    thresholds: &BTreeMap<String, f64>,
    average_kind: AverageKind,
) -> Result<LanguageTable> {
    let mut rows = BTreeMap::new();
    for g in groups {
        if g.records.is_empty() {
            log::warn!("language `{}` has no questions; omitted", g.language);
            continue;
        }
        if rows.contains_key(&g.language) {
            return Err(Error::invalid(format!("language `{}` listed twice", g.language)));
        }
        let report = evaluate(&g.records, &g.labels, thresholds.get(&g.language).copied())?;
        rows.insert(g.language.clone(), report);
    }
    if rows.is_empty() {
        return Err(Error::invalid("no language has any questions"));
    }
    let average = average_metrics(rows.values(), average_kind);
    Ok(LanguageTable {
        rows,
        average,
        average_kind,
        iaa: BTreeMap::new(),
    })
}

pub fn average_metrics<'a>(
    reports: impl IntoIterator<Item = &'a EvalReport>,
    kind: AverageKind,
) -> Metrics {
    let mut total_w = 0.0;
    let mut sr_w = 0.0;
    let mut acc = Metrics {
        success_rate: Some(0.0),
        ..Metrics::default()
    };
    let mut any_sr = false;
    for r in reports {
        let w = match kind {
            AverageKind::Unweighted => 1.0,
            AverageKind::QuestionWeighted => r.questions as f64,
        };
        total_w += w;
        let m = &r.metrics;
        acc.accuracy += w * m.accuracy;
        acc.macro_f1 += w * m.macro_f1;
        for (sum, part) in [(&mut acc.label0, &m.label0), (&mut acc.label1, &m.label1)] {
            sum.precision += w * part.precision;
            sum.recall += w * part.recall;
            sum.f1 += w * part.f1;
        }
        if let Some(sr) = m.success_rate {
            any_sr = true;
            sr_w += w;
            *acc.success_rate.as_mut().expect("initialised") += w * sr;
        }
    }
    if total_w > 0.0 {
        acc.accuracy /= total_w;
        acc.macro_f1 /= total_w;
        for l in [&mut acc.label0, &mut acc.label1] {
            l.precision /= total_w;
            l.recall /= total_w;
            l.f1 /= total_w;
        }
    }
    acc.success_rate = if any_sr && sr_w > 0.0 {
        acc.success_rate.map(|s| s / sr_w)
    } else {
        None
    };
    acc
}
