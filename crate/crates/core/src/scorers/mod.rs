//! Paragraph scoring backends.
//!
//! Every backend reports a [`ScoreRange`]; the default decision threshold of
//! a backend is the midpoint of that range.

mod embedding;
mod external;
mod focal;
mod lexical;
mod tfidf;
mod trivial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::TrainingInstance;

pub use embedding::{score_embedding, EmbeddingRecord, EmbeddingScorer, EmbeddingStore};
pub use external::{
    external_score, parse_handshake, parse_response, run_session, ExternalEndpoint, ExternalResult,
    Handshake, ScoreRequest, ScoreResponse,
};
pub use focal::{focal_loss, focal_loss_logit, sigmoid, LossConfig, LossKind, PROB_EPS};
pub use lexical::{
    featurize, train_lexical, LexicalModel, LexicalScorer, TrainHyper, FEATURE_NAMES,
};
pub use tfidf::{fit_tfidf, SparseVector, TfidfModel, TfidfScorer};
pub use trivial::{score_trivial, TrivialKind, TrivialScorer};

/// Closed interval `[lo, hi]` a scorer's outputs fall in; serialized as a
/// two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange(pub f64, pub f64);

impl ScoreRange {
    pub const UNIT: ScoreRange = ScoreRange(0.0, 1.0);
    pub const SIGNED_UNIT: ScoreRange = ScoreRange(-1.0, 1.0);

    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn contains(&self, x: f64) -> bool {
        self.0 <= x && x <= self.1
    }
}

/// Midpoint of the score range.
pub fn default_threshold(range: ScoreRange) -> Result<f64> {
    if !(range.0 < range.1) {
        return Err(Error::invalid(format!(
            "score range [{}, {}] is empty",
            range.0, range.1
        )));
    }
    Ok((range.0 + range.1) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub qa_id: String,
    pub paragraph_index: usize,
    pub score: f64,
    pub scorer: String,
    pub score_range: ScoreRange,
}

/// A per-instance scoring backend.
pub trait Scorer {
    fn id(&self) -> String;

    fn score_range(&self) -> ScoreRange;

    fn score(&self, instance: &TrainingInstance) -> Result<f64>;

    fn score_record(&self, instance: &TrainingInstance) -> Result<ScoreRecord> {
        let score = self.score(instance)?;
        let range = self.score_range();
        if !range.contains(score) {
            return Err(Error::invalid(format!(
                "{} produced {score} outside [{}, {}]",
                self.id(),
                range.0,
                range.1
            )));
        }
        Ok(ScoreRecord {
            qa_id: instance.qa_id.clone(),
            paragraph_index: instance.paragraph_index,
            score,
            scorer: self.id(),
            score_range: range,
        })
    }
}

pub fn score_all<S: Scorer + ?Sized>(
    scorer: &S,
    instances: &[TrainingInstance],
) -> Result<Vec<ScoreRecord>> {
    instances.iter().map(|i| scorer.score_record(i)).collect()
}
