use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{fold_case, trim_punct, Tokenizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramRow {
    pub ngram: String,
    /// Number of questions containing the n-gram.
    pub count: usize,
    /// `count` over the number of questions with at least `n` tokens, in percent.
    pub percent: f64,
}

/// Most frequent case-folded token n-grams across questions. Tokens have edge
/// punctuation trimmed; a question contributes each distinct n-gram once.
pub fn ngram_table<S: AsRef<str>>(
    questions: &[S],
    n: usize,
    tokenizer: &Tokenizer,
) -> Result<Vec<NgramRow>> {
    if n == 0 {
        return Err(Error::invalid("n-gram order must be at least 1"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut eligible = 0usize;
    for q in questions {
        let tokens: Vec<String> = tokenizer
            .tokenize(q.as_ref())?
            .iter()
            .map(|t| fold_case(trim_punct(t)))
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() < n {
            continue;
        }
        eligible += 1;
        let distinct: BTreeSet<String> = tokens.windows(n).map(|w| w.join(" ")).collect();
        for g in distinct {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    let mut rows: Vec<NgramRow> = counts
        .into_iter()
        .map(|(ngram, count)| NgramRow {
            ngram,
            count,
            percent: 100.0 * count as f64 / eligible as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.ngram.cmp(&b.ngram)));
    Ok(rows)
}

/// `what is ... (12%)` lines, one per row.
pub fn render_ngram_table(rows: &[NgramRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let pct = if r.percent >= 1.0 {
            format!("{:.0}", r.percent)
        } else {
            format!("{:.1}", r.percent)
        };
        let _ = writeln!(out, "{} ... ({pct}%)", r.ngram);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_bigram_share() {
        let qs = ["what is x?", "what is y?", "how so?"];
        let rows = ngram_table(&qs, 2, &Tokenizer::whitespace()).unwrap();
        assert_eq!(rows[0].ngram, "what is");
        assert_eq!(rows[0].count, 2);
        assert!((rows[0].percent - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn too_long_order_is_empty() {
        let rows = ngram_table(&["a b", "c"], 3, &Tokenizer::whitespace()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn renders_percent_lines() {
        let rows = vec![
            NgramRow {
                ngram: "what is the".into(),
                count: 7,
                percent: 7.0,
            },
            NgramRow {
                ngram: "what do we know".into(),
                count: 1,
                percent: 0.4,
            },
        ];
        assert_eq!(
            render_ngram_table(&rows),
            "what is the ... (7%)\nwhat do we know ... (0.4%)\n"
        );
    }

    #[test]
    fn zero_order_rejected() {
        assert!(ngram_table(&["a"], 0, &Tokenizer::whitespace()).is_err());
    }
}
