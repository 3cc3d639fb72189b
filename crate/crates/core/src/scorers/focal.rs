//! Weighted focal loss `-α_t (1 - p_t)^γ ln p_t` and its derivative with
//! respect to the logit, where `p = σ(z)` and `p_t` is the probability of the
//! true class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability clamp applied before taking logs.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    WeightedFocal,
    WeightedBce,
}

fn default_gamma() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Class weights `[α₀, α₁]`. `None` means 1.0 each for direct loss
    /// evaluation; the trainer replaces it with inverse class frequency.
    #[serde(default)]
    pub alpha: Option<[f64; 2]>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::WeightedFocal,
            gamma: default_gamma(),
            alpha: None,
        }
    }
}

impl LossConfig {
    pub fn focal(gamma: f64, alpha: [f64; 2]) -> Self {
        Self {
            kind: LossKind::WeightedFocal,
            gamma,
            alpha: Some(alpha),
        }
    }

    pub fn bce(alpha: [f64; 2]) -> Self {
        Self {
            kind: LossKind::WeightedBce,
            gamma: 0.0,
            alpha: Some(alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("focal gamma must be >= 0, got {}", self.gamma)));
        }
        if let Some(a) = self.alpha {
            if a.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                return Err(Error::Config(format!("class weights must be > 0, got {a:?}")));
            }
        }
        Ok(())
    }

    fn effective_gamma(&self) -> f64 {
        match self.kind {
            LossKind::WeightedFocal => self.gamma,
            LossKind::WeightedBce => 0.0,
        }
    }

    fn alpha_for(&self, y: u8) -> f64 {
        self.alpha.map_or(1.0, |a| a[usize::from(y)])
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn loss_and_grad(pt: f64, one_minus_pt: f64, ln_pt: f64, y: u8, cfg: &LossConfig) -> (f64, f64) {
    let gamma = cfg.effective_gamma();
    let alpha = cfg.alpha_for(y);
    let modulation = if gamma == 0.0 { 1.0 } else { one_minus_pt.powf(gamma) };
    let loss = -alpha * modulation * ln_pt;
    let sign = if y == 1 { 1.0 } else { -1.0 };
    let grad = sign * alpha * modulation * (gamma * pt * ln_pt - one_minus_pt);
    (loss, grad)
}

/// Loss and `dloss/dz` for predicted probability `p` of the positive class.
pub fn focal_loss(p: f64, y: u8, cfg: &LossConfig) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    if y > 1 {
        return Err(Error::invalid(format!("label {y} is not binary")));
    }
    let (pt, one_minus_pt) = if y == 1 { (p, 1.0 - p) } else { (1.0 - p, p) };
    Ok(loss_and_grad(pt, one_minus_pt, pt.ln(), y, cfg))
}

/// Same as [`focal_loss`] but from the logit, with probabilities clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn focal_loss_logit(z: f64, y: u8, cfg: &LossConfig) -> (f64, f64) {
    let margin = if y == 1 { z } else { -z };
    let pt = sigmoid(margin).clamp(PROB_EPS, 1.0 - PROB_EPS);
    let one_minus_pt = sigmoid(-margin).clamp(PROB_EPS, 1.0 - PROB_EPS);
    loss_and_grad(pt, one_minus_pt, pt.ln(), y, cfg)
}
