use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    Bce,
    Focal { gamma: f64 },
}

impl LossKind {
    pub fn with_logits(&self, logits: &[f64], targets: &[f64]) -> Result<LossValue> {
        match *self {
            LossKind::Bce => bce_with_logits(logits, targets),
            LossKind::Focal { gamma } => focal_with_logits(logits, targets, gamma),
        }
    }
}

/// Mean-reduced loss and its gradient with respect to the inputs that were
/// passed in (probabilities or logits depending on the entry point).
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    pub grad: Vec<f64>,
}

fn validate(preds: &[f64], targets: &[f64]) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(Error::Shape {
            op: "loss",
            left: (preds.len(), 1),
            right: (targets.len(), 1),
        });
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("loss over an empty batch".into()));
    }
    if let Some((i, y)) = targets
        .iter()
        .enumerate()
        .find(|(_, &y)| y != 0.0 && y != 1.0)
    {
        return Err(Error::InvalidArgument(format!(
            "target[{i}] = {y} is not in {{0, 1}}"
        )));
    }
    if preds.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("loss input"));
    }
    Ok(())
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Binary cross-entropy on probabilities; gradient w.r.t. the probabilities.
pub fn bce_loss(probs: &[f64], targets: &[f64]) -> Result<LossValue> {
    validate(probs, targets)?;
    let n = probs.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.iter().zip(targets) {
        let p = clamp_prob(p);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad.push((-y / p + (1.0 - y) / (1.0 - p)) / n);
    }
    Ok(LossValue { loss: loss / n, grad })
}

/// Binary cross-entropy on pre-sigmoid logits; gradient w.r.t. the logits.
pub fn bce_with_logits(logits: &[f64], targets: &[f64]) -> Result<LossValue> {
    validate(logits, targets)?;
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&s, &y) in logits.iter().zip(targets) {
        let p = sigmoid(s);
        let pc = clamp_prob(p);
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        grad.push((p - y) / n);
    }
    Ok(LossValue { loss: loss / n, grad })
}

/// Symmetric focal loss, `-(1-p)^γ y ln p - p^γ (1-y) ln(1-p)`, mean-reduced.
/// `gamma = 0` is exactly binary cross-entropy.
pub fn focal_loss(probs: &[f64], targets: &[f64], gamma: f64) -> Result<LossValue> {
    validate(probs, targets)?;
    check_gamma(gamma)?;
    let n = probs.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.iter().zip(targets) {
        let p = clamp_prob(p);
        let (l, g) = focal_term(p, y, gamma);
        loss += l;
        grad.push(g / n);
    }
    Ok(LossValue { loss: loss / n, grad })
}

pub fn focal_with_logits(logits: &[f64], targets: &[f64], gamma: f64) -> Result<LossValue> {
    validate(logits, targets)?;
    check_gamma(gamma)?;
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&s, &y) in logits.iter().zip(targets) {
        let p = clamp_prob(sigmoid(s));
        let (l, g) = focal_term(p, y, gamma);
        loss += l;
        grad.push(g * p * (1.0 - p) / n);
    }
    Ok(LossValue { loss: loss / n, grad })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "focal gamma must be >= 0, got {gamma}"
        )));
    }
    Ok(())
}

/// Per-sample loss and d(loss)/dp.
fn focal_term(p: f64, y: f64, gamma: f64) -> (f64, f64) {
    let q = 1.0 - p;
    let mut l = 0.0;
    let mut g = 0.0;
    if y == 1.0 {
        let w = q.powf(gamma);
        l -= w * p.ln();
        // γ(1-p)^(γ-1) ln p, written without the negative power
        let dw = if gamma == 0.0 { 0.0 } else { gamma * q.powf(gamma - 1.0) };
        g += dw * p.ln() - w / p;
    } else {
        let w = p.powf(gamma);
        l -= w * q.ln();
        let dw = if gamma == 0.0 { 0.0 } else { gamma * p.powf(gamma - 1.0) };
        g += -dw * q.ln() + w / q;
    }
    (l, g)
}
