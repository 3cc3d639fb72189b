//! Silver-label curation: interrogative subheadings become questions and the
//! paragraphs after them, up to the next subheading, become their answers.

mod ngrams;
mod split;
mod stats;

use std::collections::BTreeSet;

use crate::model::{Article, BlockKind, LanguageProfile, QAPair, Split};

pub use ngrams::{ngram_table, render_ngram_table, NgramRow};
pub use split::{split_dataset, SplitRatios};
pub use stats::{corpus_stats, LanguageRow, StatsReport};

/// True iff the last non-whitespace code point is one of the profile's
/// interrogative terminators.
pub fn is_interrogative(subheading: &str, profile: &LanguageProfile) -> bool {
    subheading
        .trim_end()
        .chars()
        .next_back()
        .is_some_and(|c| profile.terminators.contains(&c))
}

/// True iff the question contains any of the profile's exclusion phrases.
pub fn is_excluded(question: &str, profile: &LanguageProfile) -> bool {
    profile
        .exclusion_phrases
        .iter()
        .any(|phrase| !phrase.is_empty() && question.contains(phrase.as_str()))
}

/// One pair per kept interrogative subheading. Pairs whose silver span is
/// empty (subheading followed directly by another subheading or the end of
/// the article) are dropped.
pub fn extract_qa_pairs(article: &Article, profile: &LanguageProfile) -> Vec<QAPair> {
    let context: Vec<usize> = (0..article.paragraph_count()).collect();
    let mut pairs = Vec::new();
    let mut open: Option<(usize, &str, BTreeSet<usize>)> = None;
    let mut paragraph = 0;

    let mut close = |open: &mut Option<(usize, &str, BTreeSet<usize>)>| {
        if let Some((block_index, question, silver)) = open.take() {
            if !silver.is_empty() {
                pairs.push(QAPair {
                    id: format!("{}-{block_index}", article.id),
                    article_id: article.id.clone(),
                    question: question.to_string(),
                    context_paragraph_ids: context.clone(),
                    silver_ids: silver,
                    split: Split::Unassigned,
                });
            }
        }
    };

    for block in &article.blocks {
        match block.kind {
            BlockKind::Paragraph => {
                if let Some((_, _, silver)) = open.as_mut() {
                    silver.insert(paragraph);
                }
                paragraph += 1;
            }
            BlockKind::Subheading => {
                close(&mut open);
                if is_interrogative(&block.text, profile) && !is_excluded(&block.text, profile) {
                    open = Some((block.index, block.text.as_str(), BTreeSet::new()));
                }
            }
        }
    }
    close(&mut open);
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{article_id_for_url, normalize_text, Block};
    use crate::profiles::ProfileRegistry;

    pub(crate) fn article_from(spec: &[(&str, &str)]) -> Article {
        let url = "https://example.org/news/1";
        Article {
            id: article_id_for_url(url),
            url: url.into(),
            title: "title".into(),
            language: "en".into(),
            fetched_at: chrono::DateTime::from_timestamp(0, 0).unwrap(),
            published_year: None,
            blocks: spec
                .iter()
                .enumerate()
                .map(|(index, (kind, text))| Block {
                    kind: if *kind == "S" {
                        BlockKind::Subheading
                    } else {
                        BlockKind::Paragraph
                    },
                    text: text.to_string(),
                    index,
                })
                .collect(),
        }
    }

    fn set(ids: &[usize]) -> BTreeSet<usize> {
        ids.iter().copied().collect()
    }

    #[test]
    fn english_question_mark() {
        let p = LanguageProfile::basic("en");
        assert!(is_interrogative(
            "How did Jawaharlal Nehru become the first Prime Minister of India?",
            &p
        ));
        assert!(!is_interrogative("Background", &p));
        assert!(!is_interrogative("", &p));
    }

    #[test]
    fn arabic_question_mark() {
        let reg = ProfileRegistry::builtin();
        let ar = reg.get("ar").unwrap();
        assert!(is_interrogative("ماذا حدث في المنطقة؟", ar));
        assert!(!is_interrogative("ماذا حدث في المنطقة", ar));
    }

    #[test]
    fn lexicon_exclusions() {
        let reg = ProfileRegistry::builtin();
        assert!(is_excluded(&normalize_text("हे वाचलंत का?"), reg.get("mr").unwrap()));
        assert!(is_excluded(&normalize_text("А ви знали?"), reg.get("uk").unwrap()));
        assert!(!is_excluded(
            "What is the situation in the region?",
            reg.get("en").unwrap()
        ));
    }

    #[test]
    fn figure_one_layout() {
        let a = article_from(&[
            ("P", "p0"),
            ("S", "Why?"),
            ("P", "p1"),
            ("P", "p2"),
            ("S", "Next"),
            ("P", "p3"),
        ]);
        let pairs = extract_qa_pairs(&a, &LanguageProfile::basic("en"));
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].question, "Why?");
        assert_eq!(pairs[0].silver_ids, set(&[1, 2]));
        assert_eq!(pairs[0].context_paragraph_ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn no_interrogatives_no_pairs() {
        let a = article_from(&[("P", "a"), ("S", "Intro"), ("P", "b")]);
        assert!(extract_qa_pairs(&a, &LanguageProfile::basic("en")).is_empty());
    }

    #[test]
    fn two_questions_share_context() {
        let a = article_from(&[
            ("S", "One?"),
            ("P", "a"),
            ("S", "Two?"),
            ("P", "b"),
            ("P", "c"),
        ]);
        let pairs = extract_qa_pairs(&a, &LanguageProfile::basic("en"));
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].silver_ids, set(&[0]));
        assert_eq!(pairs[1].silver_ids, set(&[1, 2]));
        assert_eq!(pairs[0].context_paragraph_ids, vec![0, 1, 2]);
        assert_eq!(pairs[1].context_paragraph_ids, vec![0, 1, 2]);
    }

    #[test]
    fn empty_span_dropped() {
        let a = article_from(&[("P", "a"), ("S", "Empty?"), ("S", "Full?"), ("P", "b"), ("S", "Tail?")]);
        let pairs = extract_qa_pairs(&a, &LanguageProfile::basic("en"));
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].question, "Full?");
        assert_eq!(pairs[0].silver_ids, set(&[1]));
    }

    #[test]
    fn excluded_subheading_still_ends_previous_span() {
        let mut p = LanguageProfile::basic("en");
        p.exclusion_phrases = vec!["Did you know".into()];
        let a = article_from(&[("S", "Why?"), ("P", "a"), ("S", "Did you know?"), ("P", "b")]);
        let pairs = extract_qa_pairs(&a, &p);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].silver_ids, set(&[0]));
    }
}
