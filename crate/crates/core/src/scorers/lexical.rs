//! Logistic paragraph classifier over lexical features, trained with the
//! weighted focal loss.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::focal::{focal_loss_logit, sigmoid, LossConfig};
use super::tfidf::TfidfModel;
use super::{ScoreRange, Scorer};
use crate::error::{Error, Result};
use crate::instances::TrainingInstance;
use crate::textproc::{strip_punct_and_stopwords, Tokenizer};

/// Feature order produced by [`featurize`].
pub const FEATURE_NAMES: [&str; 6] = [
    "tfidf_question_candidate",
    "jaccard_question_candidate",
    "position_ratio",
    "log_candidate_tokens",
    "question_tokens",
    "tfidf_question_prior",
];

pub fn featurize(
    instance: &TrainingInstance,
    tfidf: &TfidfModel,
    tokenizer: &Tokenizer,
) -> Result<Vec<f64>> {
    let q_tokens = tokenizer.tokenize(&instance.question)?;
    let c_tokens = tokenizer.tokenize(&instance.candidate)?;
    let q_vec = tfidf.vectorize_tokens(&q_tokens);
    let c_vec = tfidf.vectorize_tokens(&c_tokens);

    let q_set: BTreeSet<String> = strip_punct_and_stopwords(&q_tokens, &tfidf.stopwords)
        .into_iter()
        .collect();
    let c_set: BTreeSet<String> = strip_punct_and_stopwords(&c_tokens, &tfidf.stopwords)
        .into_iter()
        .collect();
    let union = q_set.union(&c_set).count();
    let jaccard = if union == 0 {
        0.0
    } else {
        q_set.intersection(&c_set).count() as f64 / union as f64
    };

    let p = instance.context_size.max(instance.paragraph_index + 1);
    let position = instance.paragraph_index as f64 / p as f64;

    let prior_cos = if instance.prior.is_empty() {
        0.0
    } else {
        let prior = tfidf.vectorize(tokenizer, &instance.prior.join(" "))?;
        TfidfModel::cosine(&q_vec, &prior)
    };

    Ok(vec![
        TfidfModel::cosine(&q_vec, &c_vec),
        jaccard,
        position,
        (1.0 + c_tokens.len() as f64).ln(),
        q_tokens.len() as f64,
        prior_cos,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub steps: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            steps: 500,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalModel {
    pub feature_spec: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: LossConfig,
    /// Mean mini-batch loss at the start of each step.
    pub loss_log: Vec<f64>,
}

impl LexicalModel {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// Mini-batch gradient descent on the mean weighted focal loss of a logistic
/// model. Without explicit class weights, `α_c = N / (2 N_c)` so that
/// `α₀N₀ + α₁N₁ = N`.
pub fn train_lexical(
    data: &[(Vec<f64>, u8)],
    feature_spec: &[&str],
    loss: LossConfig,
    hyper: TrainHyper,
) -> Result<LexicalModel> {
    loss.validate()?;
    let dim = feature_spec.len();
    if let Some((x, _)) = data.iter().find(|(x, _)| x.len() != dim) {
        return Err(Error::invalid(format!(
            "feature vector of length {} for a {dim}-feature spec",
            x.len()
        )));
    }
    if data.iter().any(|(_, y)| *y > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    let positives = data.iter().filter(|(_, y)| *y == 1).count();
    let negatives = data.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid(
            "training data needs at least one instance of each label",
        ));
    }
    let n = data.len() as f64;
    let loss = LossConfig {
        alpha: Some(loss.alpha.unwrap_or([
            n / (2.0 * negatives as f64),
            n / (2.0 * positives as f64),
        ])),
        ..loss
    };

    let batch = if hyper.batch_size == 0 {
        data.len()
    } else {
        hyper.batch_size.min(data.len())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();

    let mut model = LexicalModel {
        feature_spec: feature_spec.iter().map(|s| s.to_string()).collect(),
        weights: vec![0.0; dim],
        bias: 0.0,
        loss,
        loss_log: Vec::with_capacity(hyper.steps),
    };
    let mut grad_w = vec![0.0; dim];
    for _ in 0..hyper.steps {
        if cursor + batch > order.len() {
            if batch < order.len() {
                order.shuffle(&mut rng);
            }
            cursor = 0;
        }
        let idx = &order[cursor..cursor + batch];
        cursor += batch;

        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        let mut total = 0.0;
        for &i in idx {
            let (x, y) = &data[i];
            let (l, dz) = focal_loss_logit(model.logit(x), *y, &loss);
            total += l;
            grad_b += dz;
            for (g, v) in grad_w.iter_mut().zip(x) {
                *g += dz * v;
            }
        }
        let scale = hyper.learning_rate / batch as f64;
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= scale * g;
        }
        model.bias -= scale * grad_b;
        model.loss_log.push(total / batch as f64);
    }
    Ok(model)
}

pub struct LexicalScorer<'a> {
    pub model: &'a LexicalModel,
    pub tfidf: &'a TfidfModel,
    pub tokenizer: &'a Tokenizer,
}

impl Scorer for LexicalScorer<'_> {
    fn id(&self) -> String {
        "lexical".into()
    }

    fn score_range(&self) -> ScoreRange {
        ScoreRange::UNIT
    }

    fn score(&self, instance: &TrainingInstance) -> Result<f64> {
        let x = featurize(instance, self.tfidf, self.tokenizer)?;
        Ok(self.model.predict(&x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorers::fit_tfidf;
    use rand::Rng;

    fn separable(n: usize, seed: u64) -> Vec<(Vec<f64>, u8)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let y = u8::from(i % 4 == 0);
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(0.2..1.5);
                let side = if y == 1 { 1.0 } else { -1.0 };
                (vec![a + side * b, a - side * b * 0.5], y)
            })
            .collect()
    }

    #[test]
    fn separates_toy_set() {
        let data = separable(200, 1);
        let m = train_lexical(&data, &["x1", "x2"], LossConfig::default(), TrainHyper::default()).unwrap();
        let correct = data
            .iter()
            .filter(|(x, y)| u8::from(m.predict(x) >= 0.5) == *y)
            .count();
        assert_eq!(correct, data.len());
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let data = separable(100, 2);
        let h = TrainHyper { batch_size: 8, seed: 11, ..TrainHyper::default() };
        let a = train_lexical(&data, &["x1", "x2"], LossConfig::default(), h).unwrap();
        let b = train_lexical(&data, &["x1", "x2"], LossConfig::default(), h).unwrap();
        assert_eq!(a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(),
                   b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let data = separable(60, 3);
        let h = TrainHyper { learning_rate: 0.05, steps: 200, batch_size: 0, seed: 0 };
        let m = train_lexical(&data, &["x1", "x2"], LossConfig::default(), h).unwrap();
        for w in m.loss_log.windows(2) {
            assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
        }
    }

    #[test]
    fn inverse_frequency_weights() {
        let data = separable(40, 4);
        let m = train_lexical(&data, &["x1", "x2"], LossConfig::default(), TrainHyper { steps: 1, ..TrainHyper::default() }).unwrap();
        let [a0, a1] = m.loss.alpha.unwrap();
        // 10 positives, 30 negatives
        assert!((a0 * 30.0 + a1 * 10.0 - 40.0).abs() < 1e-12);
        assert!((a1 / a0 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(vec![1.0], 1u8), (vec![2.0], 1u8)];
        assert!(train_lexical(&data, &["x"], LossConfig::default(), TrainHyper::default()).is_err());
    }

    fn instance(question: &str, candidate: &str, idx: usize, p: usize) -> TrainingInstance {
        TrainingInstance {
            qa_id: "q".into(),
            paragraph_index: idx,
            question: question.into(),
            title: None,
            prior: vec![],
            candidate: candidate.into(),
            label: 0,
            context_size: p,
            truncated: false,
        }
    }

    #[test]
    fn features_of_identical_texts() {
        let t = Tokenizer::whitespace();
        let m = fit_tfidf(["cats sleep a lot", "dogs bark"], &BTreeSet::new(), &t, "en", "train").unwrap();
        let x = featurize(&instance("cats sleep", "cats sleep", 0, 10), &m, &t).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert_eq!(x[1], 1.0);
        assert_eq!(x[2], 0.0);
        let last = featurize(&instance("cats sleep", "dogs", 9, 10), &m, &t).unwrap();
        assert!((last[2] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn toy_feature_vector() {
        // docs: "red apple pie", "green apple", "blue sky"; N = 3
        // idf(apple) = ln(4/3) + 1, idf(red) = idf(pie) = idf(green) = idf(sky) = idf(blue) = ln 2 + 1
        let t = Tokenizer::whitespace();
        let sw: BTreeSet<String> = ["the".to_string()].into_iter().collect();
        let m = fit_tfidf(["red apple pie", "green apple", "blue sky"], &sw, &t, "en", "train").unwrap();
        let mut inst = instance("the red apple?", "Green apple pie.", 1, 4);
        inst.prior = vec!["blue sky".into()];
        let x = featurize(&inst, &m, &t).unwrap();
        let a = (4.0f64 / 3.0).ln() + 1.0;
        let r = 2.0f64.ln() + 1.0;
        // q = (apple a, red r); c = (apple a, green r, pie r)
        let cos = a * a / ((a * a + r * r).sqrt() * (a * a + 2.0 * r * r).sqrt());
        let expected = [cos, 1.0 / 4.0, 0.25, 4.0f64.ln(), 3.0, 0.0];
        for (got, want) in x.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{x:?}");
        }
    }
}
