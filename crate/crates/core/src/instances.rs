//! Answer paragraph selection instances: one per (question, context paragraph).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Article, QAPair};
use crate::textproc::{Tokenizer, TokenizerSpec};

fn default_budget() -> usize {
    512
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceOptions {
    #[serde(default = "default_budget")]
    pub token_budget: usize,
    #[serde(default = "yes")]
    pub include_prior_context: bool,
    #[serde(default)]
    pub include_title: bool,
    #[serde(default)]
    pub tokenizer: TokenizerSpec,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self {
            token_budget: default_budget(),
            include_prior_context: true,
            include_title: false,
            tokenizer: TokenizerSpec::whitespace(),
        }
    }
}

impl InstanceOptions {
    pub fn validate(&self) -> Result<()> {
        if self.token_budget < 16 {
            return Err(Error::Config(format!(
                "token budget {} is below the minimum of 16",
                self.token_budget
            )));
        }
        self.tokenizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub qa_id: String,
    pub paragraph_index: usize,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Preceding paragraphs in document order.
    pub prior: Vec<String>,
    pub candidate: String,
    pub label: u8,
    /// Number of context paragraphs of the pair (`p`).
    #[serde(default)]
    pub context_size: usize,
    /// Set when question and candidate alone overflowed the budget and had to
    /// be cut.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl TrainingInstance {
    /// Identifier used on the external scorer wire and by seeded baselines.
    pub fn key(&self) -> String {
        instance_key(&self.qa_id, self.paragraph_index)
    }

    /// Parts in model input order: question, title, prior paragraphs, candidate.
    pub fn parts(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.question.as_str())
            .chain(self.title.as_deref())
            .chain(self.prior.iter().map(String::as_str))
            .chain(std::iter::once(self.candidate.as_str()))
    }

    pub fn token_count(&self, tokenizer: &Tokenizer) -> Result<usize> {
        let mut n = 0;
        for part in self.parts() {
            n += tokenizer.count(part)?;
        }
        Ok(n)
    }
}

pub fn instance_key(qa_id: &str, paragraph_index: usize) -> String {
    format!("{qa_id}:{paragraph_index}")
}

fn head_tokens(tokenizer: &Tokenizer, text: &str, keep: usize) -> Result<String> {
    Ok(tokenizer
        .tokenize(text)?
        .into_iter()
        .take(keep)
        .collect::<Vec<_>>()
        .join(" "))
}

/// Builds one instance per context paragraph of `pair`.
///
/// Prior paragraphs are added nearest-first, whole paragraphs only, stopping
/// at the first one that no longer fits. When question and candidate alone
/// exceed the budget the title is dropped, the candidate is cut from the tail
/// (keeping at least one token) and the instance is flagged.
pub fn build_instances(
    pair: &QAPair,
    article: &Article,
    opts: &InstanceOptions,
    tokenizer: &Tokenizer,
) -> Result<Vec<TrainingInstance>> {
    opts.validate()?;
    if pair.article_id != article.id {
        return Err(Error::invalid(format!(
            "pair {} belongs to article {}, not {}",
            pair.id, pair.article_id, article.id
        )));
    }
    let paragraphs = article.paragraphs();
    let counts: Vec<usize> = paragraphs
        .iter()
        .map(|p| tokenizer.count(p))
        .collect::<Result<_>>()?;
    let budget = opts.token_budget;
    let question_tokens = tokenizer.count(&pair.question)?;
    let title = opts
        .include_title
        .then(|| article.title.clone())
        .filter(|t| !t.is_empty());
    let title_tokens = match &title {
        Some(t) => tokenizer.count(t)?,
        None => 0,
    };

    let mut out = Vec::with_capacity(pair.context_paragraph_ids.len());
    for (pos, &idx) in pair.context_paragraph_ids.iter().enumerate() {
        let candidate_text = paragraphs.get(idx).ok_or_else(|| {
            Error::invalid(format!(
                "pair {} references paragraph {idx} but the article has {}",
                pair.id,
                paragraphs.len()
            ))
        })?;
        let candidate_tokens = counts[idx];
        let mut question = pair.question.clone();
        let mut candidate = candidate_text.to_string();
        let mut title_part = title.clone();
        let mut truncated = false;
        let mut used = question_tokens + title_tokens + candidate_tokens;

        if used > budget && title_part.is_some() {
            title_part = None;
            used -= title_tokens;
        }
        if used > budget {
            truncated = true;
            let mut q_keep = question_tokens;
            if q_keep > budget - 1 {
                q_keep = budget - 1;
                question = head_tokens(tokenizer, &question, q_keep)?;
            }
            let c_keep = (budget - q_keep).min(candidate_tokens);
            candidate = head_tokens(tokenizer, &candidate, c_keep)?;
            used = q_keep + c_keep;
        }

        let mut prior = Vec::new();
        if opts.include_prior_context && !truncated {
            let mut remaining = budget - used;
            for &prev in pair.context_paragraph_ids[..pos].iter().rev() {
                if counts[prev] > remaining {
                    break;
                }
                remaining -= counts[prev];
                prior.push(paragraphs[prev].to_string());
            }
            prior.reverse();
        }

        out.push(TrainingInstance {
            qa_id: pair.id.clone(),
            paragraph_index: idx,
            question,
            title: title_part,
            prior,
            candidate,
            label: u8::from(pair.silver_ids.contains(&idx)),
            context_size: pair.context_paragraph_ids.len(),
            truncated,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{article_id_for_url, Block, BlockKind, Split};

    fn article(paragraphs: &[&str]) -> Article {
        let url = "https://x.org/i";
        Article {
            id: article_id_for_url(url),
            url: url.into(),
            title: "Some title here".into(),
            language: "en".into(),
            fetched_at: chrono::DateTime::from_timestamp(0, 0).unwrap(),
            published_year: None,
            blocks: paragraphs
                .iter()
                .enumerate()
                .map(|(index, t)| Block {
                    kind: BlockKind::Paragraph,
                    text: t.to_string(),
                    index,
                })
                .collect(),
        }
    }

    fn pair(a: &Article, silver: &[usize]) -> QAPair {
        QAPair {
            id: format!("{}-0", a.id),
            article_id: a.id.clone(),
            question: "what happened here?".into(),
            context_paragraph_ids: (0..a.paragraph_count()).collect(),
            silver_ids: silver.iter().copied().collect(),
            split: Split::Unassigned,
        }
    }

    fn opts(budget: usize) -> InstanceOptions {
        InstanceOptions {
            token_budget: budget,
            ..InstanceOptions::default()
        }
    }

    #[test]
    fn labels_follow_silver_membership() {
        let a = article(&["a", "b", "c", "d"]);
        let inst = build_instances(&pair(&a, &[1, 2]), &a, &opts(512), &Tokenizer::whitespace()).unwrap();
        let labels: Vec<u8> = inst.iter().map(|i| i.label).collect();
        assert_eq!(labels, vec![0, 1, 1, 0]);
    }

    #[test]
    fn p_times_q_instances() {
        let paras: Vec<String> = (0..10).map(|i| format!("paragraph {i}")).collect();
        let refs: Vec<&str> = paras.iter().map(String::as_str).collect();
        let a = article(&refs);
        let q1 = pair(&a, &[1]);
        let mut q2 = pair(&a, &[5, 6]);
        q2.id = format!("{}-1", a.id);
        let t = Tokenizer::whitespace();
        let total = build_instances(&q1, &a, &opts(512), &t).unwrap().len()
            + build_instances(&q2, &a, &opts(512), &t).unwrap().len();
        assert_eq!(total, 20);
    }

    #[test]
    fn without_prior_context() {
        let a = article(&["a b", "c d", "e f"]);
        let o = InstanceOptions {
            include_prior_context: false,
            ..InstanceOptions::default()
        };
        let inst = build_instances(&pair(&a, &[2]), &a, &o, &Tokenizer::whitespace()).unwrap();
        assert!(inst.iter().all(|i| i.prior.is_empty() && i.title.is_none()));
        assert_eq!(inst[2].parts().collect::<Vec<_>>(), vec!["what happened here?", "e f"]);
    }

    #[test]
    fn prior_fills_nearest_first() {
        // question = 3 tokens, candidate = 2, each prior = 4; budget 16 fits 2 priors.
        let a = article(&["p0 p0 p0 p0", "p1 p1 p1 p1", "p2 p2 p2 p2", "c c"]);
        let inst = build_instances(&pair(&a, &[3]), &a, &opts(16), &Tokenizer::whitespace()).unwrap();
        assert_eq!(inst[3].prior, vec!["p1 p1 p1 p1", "p2 p2 p2 p2"]);
        assert_eq!(inst[3].token_count(&Tokenizer::whitespace()).unwrap(), 13);
    }

    #[test]
    fn title_between_question_and_prior() {
        let a = article(&["a", "b"]);
        let o = InstanceOptions {
            include_title: true,
            ..InstanceOptions::default()
        };
        let inst = build_instances(&pair(&a, &[1]), &a, &o, &Tokenizer::whitespace()).unwrap();
        assert_eq!(
            inst[1].parts().collect::<Vec<_>>(),
            vec!["what happened here?", "Some title here", "a", "b"]
        );
    }

    #[test]
    fn oversized_candidate_is_truncated_and_flagged() {
        let long = vec!["w"; 40].join(" ");
        let a = article(&["x", &long]);
        let t = Tokenizer::whitespace();
        let inst = build_instances(&pair(&a, &[1]), &a, &opts(16), &t).unwrap();
        assert!(inst[1].truncated);
        assert!(inst[1].prior.is_empty());
        assert_eq!(inst[1].token_count(&t).unwrap(), 16);
        assert_eq!(t.count(&inst[1].candidate).unwrap(), 13);
        assert!(!inst[0].truncated);
    }

    #[test]
    fn oversized_question_keeps_one_candidate_token() {
        let a = article(&["c1 c2"]);
        let mut p = pair(&a, &[0]);
        p.question = vec!["q"; 30].join(" ");
        let t = Tokenizer::whitespace();
        let inst = build_instances(&p, &a, &opts(16), &t).unwrap();
        assert_eq!(inst[0].candidate, "c1");
        assert_eq!(inst[0].token_count(&t).unwrap(), 16);
    }

    #[test]
    fn small_budget_rejected() {
        let a = article(&["a"]);
        assert!(build_instances(&pair(&a, &[0]), &a, &opts(8), &Tokenizer::whitespace()).is_err());
    }
}
