use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ScoreRange, Scorer};
use crate::error::Result;
use crate::instances::TrainingInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrivialKind {
    Ones,
    Zeros,
    Random(u64),
}

/// Ones → 1, Zeros → 0, Random → 0 or 1 with equal probability, fixed per
/// (seed, instance).
pub fn score_trivial(kind: TrivialKind, instance: &TrainingInstance) -> f64 {
    match kind {
        TrivialKind::Ones => 1.0,
        TrivialKind::Zeros => 0.0,
        TrivialKind::Random(seed) => {
            let mut h = Sha256::new();
            h.update(seed.to_le_bytes());
            h.update(instance.key().as_bytes());
            f64::from(h.finalize()[0] & 1)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrivialScorer(pub TrivialKind);

impl Scorer for TrivialScorer {
    fn id(&self) -> String {
        match self.0 {
            TrivialKind::Ones => "ones".into(),
            TrivialKind::Zeros => "zeros".into(),
            TrivialKind::Random(seed) => format!("random-{seed}"),
        }
    }

    fn score_range(&self) -> ScoreRange {
        ScoreRange::UNIT
    }

    fn score(&self, instance: &TrainingInstance) -> Result<f64> {
        Ok(score_trivial(self.0, instance))
    }
}
