//! TF-IDF vectors with smoothed idf and L2 normalization.
//!
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, `w(t, d) = tf(t, d) * idf(t)`.
//! Tokens are case-folded, edge-punctuation trimmed and stopword filtered
//! before counting.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ScoreRange, Scorer};
use crate::error::{Error, Result};
use crate::instances::TrainingInstance;
use crate::textproc::{strip_punct_and_stopwords, Tokenizer};

/// Sparse vector as (term index, weight) pairs sorted by index.
pub type SparseVector = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub language: String,
    pub fitted_on: String,
    pub documents: usize,
    /// Term → dense index. Indices follow the terms' sorted order.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub stopwords: BTreeSet<String>,
}

/// Fits vocabulary and idf on training texts.
pub fn fit_tfidf<'a, I>(
    texts: I,
    stopwords: &BTreeSet<String>,
    tokenizer: &Tokenizer,
    language: &str,
    fitted_on: &str,
) -> Result<TfidfModel>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut documents = 0usize;
    for text in texts {
        documents += 1;
        let terms: BTreeSet<String> =
            strip_punct_and_stopwords(&tokenizer.tokenize(text)?, stopwords)
                .into_iter()
                .collect();
        for t in terms {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::invalid(format!(
            "empty vocabulary after preprocessing for `{language}`"
        )));
    }
    let n = documents as f64;
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (i, (term, count)) in df.into_iter().enumerate() {
        idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        vocabulary.insert(term, i);
    }
    Ok(TfidfModel {
        language: language.to_string(),
        fitted_on: fitted_on.to_string(),
        documents,
        vocabulary,
        idf,
        stopwords: stopwords.clone(),
    })
}

impl TfidfModel {
    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&i| self.idf[i])
    }

    /// L2-normalized weights of raw tokens; out-of-vocabulary terms vanish.
    pub fn vectorize_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for t in strip_punct_and_stopwords(tokens, &self.stopwords) {
            if let Some(&i) = self.vocabulary.get(&t) {
                *tf.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut v: SparseVector = tf.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut v {
                *w /= norm;
            }
        }
        v
    }

    pub fn vectorize(&self, tokenizer: &Tokenizer, text: &str) -> Result<SparseVector> {
        Ok(self.vectorize_tokens(&tokenizer.tokenize(text)?))
    }

    /// Cosine of two vectors produced by this model, clamped to [0, 1].
    pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        dot.clamp(0.0, 1.0)
    }

    pub fn score(&self, tokenizer: &Tokenizer, question: &str, paragraph: &str) -> Result<f64> {
        let q = self.vectorize(tokenizer, question)?;
        let p = self.vectorize(tokenizer, paragraph)?;
        Ok(Self::cosine(&q, &p))
    }
}

pub struct TfidfScorer<'a> {
    pub model: &'a TfidfModel,
    pub tokenizer: &'a Tokenizer,
}

impl Scorer for TfidfScorer<'_> {
    fn id(&self) -> String {
        "tfidf".into()
    }

    fn score_range(&self) -> ScoreRange {
        ScoreRange::UNIT
    }

    fn score(&self, instance: &TrainingInstance) -> Result<f64> {
        self.model
            .score(self.tokenizer, &instance.question, &instance.candidate)
    }
}
