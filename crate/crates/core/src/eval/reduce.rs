//! Score-driven context reduction and the win-ratio check on generations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{build_instances, InstanceOptions};
use crate::model::{normalize_text, Article, QAPair};
use crate::scorers::Scorer;
use crate::textproc::{fold_case, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "snake_case")]
pub enum ReductionPolicy {
    TopK(usize),
    AboveThreshold(f64),
}

/// Indices kept by `policy`, in ascending (document) order. Top-k ties go to
/// the lower index.
pub fn select_paragraphs(scores: &[(usize, f64)], policy: ReductionPolicy) -> Result<Vec<usize>> {
    if scores.iter().any(|(_, s)| s.is_nan()) {
        return Err(Error::invalid("NaN paragraph score"));
    }
    let mut kept: Vec<usize> = match policy {
        ReductionPolicy::TopK(0) => return Err(Error::invalid("top-k needs k >= 1")),
        ReductionPolicy::TopK(k) => {
            let mut ranked = scores.to_vec();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.into_iter().take(k).map(|(i, _)| i).collect()
        }
        ReductionPolicy::AboveThreshold(t) => scores
            .iter()
            .filter(|(_, s)| *s >= t)
            .map(|(i, _)| *i)
            .collect(),
    };
    kept.sort_unstable();
    kept.dedup();
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedContext {
    pub qa_id: String,
    pub paragraph_ids: Vec<usize>,
    pub paragraphs: Vec<String>,
    pub scores: Vec<f64>,
}

/// Scores every context paragraph of `pair` and keeps those chosen by
/// `policy`, in document order.
pub fn reduce_context(
    pair: &QAPair,
    article: &Article,
    scorer: &dyn Scorer,
    opts: &InstanceOptions,
    tokenizer: &Tokenizer,
    policy: ReductionPolicy,
) -> Result<ReducedContext> {
    let instances = build_instances(pair, article, opts, tokenizer)?;
    let scores = instances
        .iter()
        .map(|i| Ok((i.paragraph_index, scorer.score(i)?)))
        .collect::<Result<Vec<_>>>()?;
    reduce_with_scores(pair, article, &scores, policy)
}

/// Same as [`reduce_context`] for precomputed `(paragraph index, score)`s.
pub fn reduce_with_scores(
    pair: &QAPair,
    article: &Article,
    scores: &[(usize, f64)],
    policy: ReductionPolicy,
) -> Result<ReducedContext> {
    let paragraphs = article.paragraphs();
    let kept = select_paragraphs(scores, policy)?;
    let score_of = |i: usize| scores.iter().find(|(j, _)| *j == i).map(|(_, s)| *s);
    let mut out = ReducedContext {
        qa_id: pair.id.clone(),
        paragraph_ids: Vec::with_capacity(kept.len()),
        paragraphs: Vec::with_capacity(kept.len()),
        scores: Vec::with_capacity(kept.len()),
    };
    for i in kept {
        let text = paragraphs.get(i).ok_or_else(|| {
            Error::invalid(format!("paragraph {i} does not exist in article {}", article.id))
        })?;
        out.paragraph_ids.push(i);
        out.paragraphs.push((*text).to_string());
        out.scores.push(score_of(i).unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// Case-folded, NFC, whitespace-collapsed form used for substring matching.
pub fn normalize_for_match(s: &str) -> String {
    fold_case(&normalize_text(s))
}

/// Fraction of generations containing their gold answer after normalization.
pub fn win_ratio<G: AsRef<str>, A: AsRef<str>>(generations: &[G], gold_answers: &[A]) -> Result<f64> {
    if generations.len() != gold_answers.len() {
        return Err(Error::invalid(format!(
            "{} generations for {} gold answers",
            generations.len(),
            gold_answers.len()
        )));
    }
    if generations.is_empty() {
        return Err(Error::invalid("no generations to judge"));
    }
    let wins = generations
        .iter()
        .zip(gold_answers)
        .filter(|(g, a)| normalize_for_match(g.as_ref()).contains(&normalize_for_match(a.as_ref())))
        .count();
    Ok(wins as f64 / generations.len() as f64)
}

/// Win ratio with full context and, optionally, with reduced context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRatioReport {
    pub count: usize,
    pub full_context: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_context: Option<f64>,
}

impl WinRatioReport {
    pub fn render_text(&self) -> String {
        match self.reduced_context {
            Some(r) => format!(
                "win ratio over {} questions: {:.0}% -> {:.0}%\n",
                self.count,
                self.full_context * 100.0,
                r * 100.0
            ),
            None => format!(
                "win ratio over {} questions: {:.0}%\n",
                self.count,
                self.full_context * 100.0
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorers::ScoreRange;
    use crate::instances::TrainingInstance;
    use crate::model::{Block, BlockKind};
    use proptest::prelude::*;

    fn indexed(scores: &[f64]) -> Vec<(usize, f64)> {
        scores.iter().copied().enumerate().collect()
    }

    #[test]
    fn top_two_in_document_order() {
        let kept = select_paragraphs(&indexed(&[0.9, 0.1, 0.8, 0.2]), ReductionPolicy::TopK(2)).unwrap();
        assert_eq!(kept, vec![0, 2]);
    }

    #[test]
    fn top_one_tie_goes_low() {
        let kept = select_paragraphs(&indexed(&[0.3, 0.7, 0.7]), ReductionPolicy::TopK(1)).unwrap();
        assert_eq!(kept, vec![1]);
    }

    #[test]
    fn threshold_policy_and_errors() {
        let s = indexed(&[0.5, 0.49, 0.51]);
        assert_eq!(select_paragraphs(&s, ReductionPolicy::AboveThreshold(0.5)).unwrap(), vec![0, 2]);
        assert!(select_paragraphs(&s, ReductionPolicy::TopK(0)).is_err());
        assert_eq!(select_paragraphs(&s, ReductionPolicy::TopK(10)).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn win_ratio_normalizes() {
        let g = ["The answer is  Forty\nTwo.", "nothing here"];
        assert_eq!(win_ratio(&g, &["forty two", "nothing"]).unwrap(), 1.0);
        assert_eq!(win_ratio(&g, &["x", "y"]).unwrap(), 0.0);
        assert_eq!(win_ratio(&g, &["forty two", "y"]).unwrap(), 0.5);
        assert!(win_ratio(&g, &["a"]).is_err());
        assert!(win_ratio::<&str, &str>(&[], &[]).is_err());
    }

    struct ByLength;

    impl Scorer for ByLength {
        fn id(&self) -> String {
            "len".into()
        }
        fn score_range(&self) -> ScoreRange {
            ScoreRange(0.0, 1000.0)
        }
        fn score(&self, i: &TrainingInstance) -> Result<f64> {
            Ok(i.candidate.len() as f64)
        }
    }

    #[test]
    fn reduce_full_article() {
        let texts = ["short", "a much longer paragraph", "mid length", "x"];
        let article = Article {
            id: "a".into(),
            url: "https://example.org/a".into(),
            title: "T".into(),
            language: "en".into(),
            fetched_at: chrono::DateTime::UNIX_EPOCH,
            published_year: None,
            blocks: texts
                .iter()
                .enumerate()
                .map(|(i, t)| Block { kind: BlockKind::Paragraph, text: t.to_string(), index: i })
                .collect(),
        };
        let pair = QAPair {
            id: "a-0".into(),
            article_id: "a".into(),
            question: "why?".into(),
            context_paragraph_ids: vec![0, 1, 2, 3],
            silver_ids: [1].into(),
            split: Default::default(),
        };
        let t = Tokenizer::whitespace();
        let r = reduce_context(&pair, &article, &ByLength, &InstanceOptions::default(), &t, ReductionPolicy::TopK(2)).unwrap();
        assert_eq!(r.paragraph_ids, vec![1, 2]);
        assert_eq!(r.paragraphs, vec![texts[1], texts[2]]);
        let all = reduce_context(&pair, &article, &ByLength, &InstanceOptions::default(), &t, ReductionPolicy::TopK(4)).unwrap();
        assert_eq!(all.paragraphs, texts);
    }

    proptest! {
        #[test]
        fn reduction_properties(scores in proptest::collection::vec(0u8..5, 1..30), k in 1usize..40) {
            let s: Vec<(usize, f64)> = scores.iter().map(|&v| f64::from(v)).enumerate().collect();
            let p = s.len();
            let all = select_paragraphs(&s, ReductionPolicy::TopK(p)).unwrap();
            prop_assert_eq!(all, (0..p).collect::<Vec<_>>());

            let one = select_paragraphs(&s, ReductionPolicy::TopK(1)).unwrap();
            let max = scores.iter().max().unwrap();
            let argmax = scores.iter().position(|v| v == max).unwrap();
            prop_assert_eq!(one, vec![argmax]);

            let kept = select_paragraphs(&s, ReductionPolicy::TopK(k)).unwrap();
            prop_assert_eq!(kept.len(), k.min(p));
            prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
