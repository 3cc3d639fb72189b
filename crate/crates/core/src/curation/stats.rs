use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Article, QAPair};
use crate::textproc::{SegmenterSet, Tokenizer};

/// Per-language counts and earliest publication year.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub qa_pairs: usize,
    pub articles: usize,
    pub start_year: Option<i32>,
}

/// Corpus-level statistics. Article length is measured over its paragraphs;
/// an answer is the concatenation of its silver paragraphs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub languages: usize,
    pub qa_pairs: usize,
    pub articles: usize,
    pub unique_questions: usize,
    pub avg_article_words: f64,
    pub avg_paragraph_words: f64,
    pub avg_answer_words: f64,
    pub avg_question_words: f64,
    pub avg_article_sentences: f64,
    pub avg_paragraph_sentences: f64,
    pub avg_answer_sentences: f64,
    pub avg_question_sentences: f64,
    pub avg_paragraphs_per_article: f64,
    pub avg_paragraphs_per_answer: f64,
    pub per_language: BTreeMap<String, LanguageRow>,
}

fn mean(sum: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

pub fn corpus_stats(
    articles: &[Article],
    pairs: &[QAPair],
    tokenizer: &Tokenizer,
    segmenters: &SegmenterSet,
) -> Result<StatsReport> {
    // Per paragraph (words, sentences), keyed by article id.
    let mut lengths: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    let mut per_language: BTreeMap<String, LanguageRow> = BTreeMap::new();
    let mut lang_of: BTreeMap<&str, &str> = BTreeMap::new();

    let (mut article_words, mut article_sents) = (0, 0);
    let (mut paragraph_count, mut paragraph_words, mut paragraph_sents) = (0, 0, 0);
    for a in articles {
        let seg = segmenters.get(&a.language);
        let mut per_para = Vec::new();
        for text in a.paragraphs() {
            let w = tokenizer.count(text)?;
            let s = seg.segment(text)?.len();
            per_para.push((w, s));
            article_words += w;
            article_sents += s;
            paragraph_words += w;
            paragraph_sents += s;
            paragraph_count += 1;
        }
        lengths.insert(&a.id, per_para);
        lang_of.insert(&a.id, &a.language);
        let row = per_language.entry(a.language.clone()).or_default();
        row.articles += 1;
        if let Some(y) = a.published_year {
            row.start_year = Some(row.start_year.map_or(y, |s| s.min(y)));
        }
    }

    let (mut answer_words, mut answer_sents, mut answer_paragraphs) = (0, 0, 0);
    let (mut question_words, mut question_sents) = (0, 0);
    let mut unique = BTreeSet::new();
    for p in pairs {
        let lang = lang_of.get(p.article_id.as_str()).copied().unwrap_or("");
        if let Some(per_para) = lengths.get(p.article_id.as_str()) {
            for &i in &p.silver_ids {
                if let Some((w, s)) = per_para.get(i) {
                    answer_words += w;
                    answer_sents += s;
                }
            }
        }
        answer_paragraphs += p.silver_ids.len();
        question_words += tokenizer.count(&p.question)?;
        question_sents += segmenters.get(lang).segment(&p.question)?.len();
        unique.insert(p.question.as_str());
        per_language.entry(lang.to_string()).or_default().qa_pairs += 1;
    }
    per_language.remove("");

    let n_articles = articles.len();
    let n_pairs = pairs.len();
    Ok(StatsReport {
        languages: per_language.len(),
        qa_pairs: n_pairs,
        articles: n_articles,
        unique_questions: unique.len(),
        avg_article_words: mean(article_words, n_articles),
        avg_paragraph_words: mean(paragraph_words, paragraph_count),
        avg_answer_words: mean(answer_words, n_pairs),
        avg_question_words: mean(question_words, n_pairs),
        avg_article_sentences: mean(article_sents, n_articles),
        avg_paragraph_sentences: mean(paragraph_sents, paragraph_count),
        avg_answer_sentences: mean(answer_sents, n_pairs),
        avg_question_sentences: mean(question_sents, n_pairs),
        avg_paragraphs_per_article: mean(paragraph_count, n_articles),
        avg_paragraphs_per_answer: mean(answer_paragraphs, n_pairs),
        per_language,
    })
}

impl StatsReport {
    /// Row labels and values in display order.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let f = |x: f64| format!("{x:.2}");
        vec![
            ("Number of Languages", self.languages.to_string()),
            ("Number of QA pairs", self.qa_pairs.to_string()),
            ("Number of Articles", self.articles.to_string()),
            ("Number of Unique Questions", self.unique_questions.to_string()),
            ("Avg. Article Length (Word)", f(self.avg_article_words)),
            ("Avg. Paragraph Length (Word)", f(self.avg_paragraph_words)),
            ("Avg. Answer Length (Word)", f(self.avg_answer_words)),
            ("Avg. Question Length (Word)", f(self.avg_question_words)),
            ("Avg. Article Length (Sentence)", f(self.avg_article_sentences)),
            ("Avg. Paragraph Length (Sentence)", f(self.avg_paragraph_sentences)),
            ("Avg. Answer Length (Sentence)", f(self.avg_answer_sentences)),
            ("Avg. Question Length (Sentence)", f(self.avg_question_sentences)),
            ("Avg. Paragraphs per Article", f(self.avg_paragraphs_per_article)),
            ("Avg. Paragraphs per Answer", f(self.avg_paragraphs_per_answer)),
        ]
    }

    pub fn render_text(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (label, value) in rows {
            let _ = writeln!(out, "{label:<width$}  {value:>10}");
        }
        if !self.per_language.is_empty() {
            let _ = writeln!(out, "\n{:<8} {:>8} {:>9} {:>10}", "Code", "#QA", "#Articles", "Start Year");
            for (code, row) in &self.per_language {
                let year = row.start_year.map_or("-".to_string(), |y| y.to_string());
                let _ = writeln!(out, "{code:<8} {:>8} {:>9} {year:>10}", row.qa_pairs, row.articles);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{article_id_for_url, Block, BlockKind, Split};

    fn art(url: &str, blocks: &[(BlockKind, &str)]) -> Article {
        Article {
            id: article_id_for_url(url),
            url: url.into(),
            title: "t".into(),
            language: "en".into(),
            fetched_at: chrono::DateTime::from_timestamp(0, 0).unwrap(),
            published_year: None,
            blocks: blocks
                .iter()
                .enumerate()
                .map(|(index, (kind, text))| Block {
                    kind: *kind,
                    text: text.to_string(),
                    index,
                })
                .collect(),
        }
    }

    fn pair(article: &Article, k: usize, q: &str, silver: &[usize]) -> QAPair {
        QAPair {
            id: format!("{}-{k}", article.id),
            article_id: article.id.clone(),
            question: q.into(),
            context_paragraph_ids: (0..article.paragraph_count()).collect(),
            silver_ids: silver.iter().copied().collect(),
            split: Split::Unassigned,
        }
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let r = corpus_stats(&[], &[], &Tokenizer::whitespace(), &SegmenterSet::default()).unwrap();
        assert_eq!(r, StatsReport::default());
    }

    #[test]
    fn hand_counted_fixture() {
        use BlockKind::*;
        // Article A paragraphs: "a b c." (3w,1s) "d e. f g." (4w,2s) "h" (1w,1s)
        // Article B paragraphs: "one two" (2w,1s) "three four five six." (4w,1s)
        let a = art(
            "https://x.org/a",
            &[
                (Paragraph, "a b c."),
                (Subheading, "Why now?"),
                (Paragraph, "d e. f g."),
                (Subheading, "How so?"),
                (Paragraph, "h"),
            ],
        );
        let b = art(
            "https://x.org/b",
            &[
                (Subheading, "Why now?"),
                (Paragraph, "one two"),
                (Paragraph, "three four five six."),
            ],
        );
        let pairs = vec![
            pair(&a, 1, "Why now?", &[1]),
            pair(&a, 3, "How so?", &[2]),
            pair(&b, 0, "Why now?", &[0, 1]),
        ];
        let r = corpus_stats(
            &[a, b],
            &pairs,
            &Tokenizer::whitespace(),
            &SegmenterSet::default(),
        )
        .unwrap();
        assert_eq!(r.languages, 1);
        assert_eq!(r.qa_pairs, 3);
        assert_eq!(r.articles, 2);
        assert_eq!(r.unique_questions, 2);
        // words: A = 8, B = 6 -> 7.0; paragraphs: 14 / 5
        assert_eq!(r.avg_article_words, 7.0);
        assert_eq!(r.avg_paragraph_words, 14.0 / 5.0);
        // answers: 4w/2s, 1w/1s, 6w/2s
        assert_eq!(r.avg_answer_words, 11.0 / 3.0);
        assert_eq!(r.avg_answer_sentences, 5.0 / 3.0);
        assert_eq!(r.avg_question_words, 2.0);
        assert_eq!(r.avg_question_sentences, 1.0);
        // sentences: A = 4, B = 2
        assert_eq!(r.avg_article_sentences, 3.0);
        assert_eq!(r.avg_paragraph_sentences, 6.0 / 5.0);
        assert_eq!(r.avg_paragraphs_per_article, 2.5);
        assert_eq!(r.avg_paragraphs_per_answer, 4.0 / 3.0);
    }

    #[test]
    fn single_paragraph_answers() {
        use BlockKind::*;
        let a = art("https://x.org/c", &[(Subheading, "Q?"), (Paragraph, "x"), (Subheading, "R?"), (Paragraph, "y")]);
        let pairs = vec![pair(&a, 0, "Q?", &[0]), pair(&a, 2, "R?", &[1])];
        let r = corpus_stats(&[a], &pairs, &Tokenizer::whitespace(), &SegmenterSet::default()).unwrap();
        assert_eq!(r.avg_paragraphs_per_answer, 1.0);
    }

    #[test]
    fn text_report_uses_table_labels() {
        let text = StatsReport::default().render_text();
        assert!(text.contains("Avg. Paragraphs per Answer"));
        assert!(text.contains("Number of Unique Questions"));
    }
}
