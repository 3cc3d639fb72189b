use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScoreRange, Scorer};
use crate::error::{Error, Result};
use crate::instances::TrainingInstance;
use crate::store::read_jsonl;

/// Cosine similarity of two dense vectors.
pub fn score_embedding(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::invalid(format!(
            "embedding dimensions differ: {} vs {}",
            q.len(),
            p.len()
        )));
    }
    let dot: f64 = q.iter().zip(p).map(|(a, b)| a * b).sum();
    let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
    let np = p.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nq == 0.0 || np == 0.0 {
        return Err(Error::invalid("zero embedding vector"));
    }
    Ok((dot / (nq * np)).clamp(-1.0, 1.0))
}

/// One line of an embeddings file. Question vectors use the QA id as key,
/// paragraph vectors use `<article_id>:<paragraph_index>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub key: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn load(path: &Path) -> Result<Self> {
        let records: Vec<EmbeddingRecord> = read_jsonl(path)?;
        Ok(records.into_iter().collect())
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) {
        self.vectors.insert(key.into(), vector);
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn paragraph_key(article_id: &str, paragraph_index: usize) -> String {
        format!("{article_id}:{paragraph_index}")
    }
}

impl FromIterator<EmbeddingRecord> for EmbeddingStore {
    fn from_iter<T: IntoIterator<Item = EmbeddingRecord>>(iter: T) -> Self {
        Self {
            vectors: iter.into_iter().map(|r| (r.key, r.vector)).collect(),
        }
    }
}

pub struct EmbeddingScorer<'a> {
    pub store: &'a EmbeddingStore,
    /// QA id → article id.
    pub article_of: &'a HashMap<String, String>,
}

impl Scorer for EmbeddingScorer<'_> {
    fn id(&self) -> String {
        "embedding".into()
    }

    fn score_range(&self) -> ScoreRange {
        ScoreRange::SIGNED_UNIT
    }

    fn score(&self, instance: &TrainingInstance) -> Result<f64> {
        let q = self
            .store
            .get(&instance.qa_id)
            .ok_or_else(|| Error::invalid(format!("no embedding for question {}", instance.qa_id)))?;
        let article = self.article_of.get(&instance.qa_id).ok_or_else(|| {
            Error::invalid(format!("unknown article for question {}", instance.qa_id))
        })?;
        let key = EmbeddingStore::paragraph_key(article, instance.paragraph_index);
        let p = self
            .store
            .get(&key)
            .ok_or_else(|| Error::invalid(format!("no embedding for paragraph {key}")))?;
        score_embedding(q, p)
    }
}
