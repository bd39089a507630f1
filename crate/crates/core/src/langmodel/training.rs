//! Anchored fine-tuning: token cross-entropy plus an L1 pull toward frozen
//! parameters.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Context, TinyNeuralLM};
use crate::error::{Error, Result};
use crate::tokenization::TokenId;

/// Below this distance from the anchor the L1 subgradient is taken as 0.
pub const L1_KINK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Weight of the L1 anchor term.
    pub lambda: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            lambda: 0.0,
            learning_rate: 0.1,
            steps: 1000,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// One next-token prediction: the (already truncated) context and the
/// token that followed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub context: Vec<TokenId>,
    pub target: TokenId,
}

impl TrainingExample {
    /// Every position of every document, followed by an EOS prediction.
    pub fn from_documents(docs: &[Vec<TokenId>], window: usize) -> Vec<TrainingExample> {
        let mut out = Vec::new();
        for doc in docs {
            for i in 0..=doc.len() {
                let start = i.saturating_sub(window);
                out.push(TrainingExample {
                    context: doc[start..i].to_vec(),
                    target: doc.get(i).copied().unwrap_or(TokenId::EOS),
                });
            }
        }
        out
    }

    /// Predictions of `continuation` (then EOS) given `prompt`; the prompt
    /// itself is only context.
    pub fn continuation(prompt: &[TokenId], continuation: &[TokenId], window: usize) -> Vec<TrainingExample> {
        let mut seq = prompt.to_vec();
        seq.extend_from_slice(continuation);
        (prompt.len()..=seq.len())
            .map(|i| TrainingExample {
                context: seq[i.saturating_sub(window)..i].to_vec(),
                target: seq.get(i).copied().unwrap_or(TokenId::EOS),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Mean token cross-entropy, nats.
    pub ce: f64,
    /// `λ · ‖θ − θ̂‖₁`.
    pub l1_term: f64,
    pub total: f64,
}

/// One line of the JSONL training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingLogRecord {
    pub step: usize,
    pub ce_loss: f64,
    pub l1_term: f64,
    pub total: f64,
}

/// Adds the gradient of the batch-mean cross-entropy to `grad`; returns the
/// batch-mean cross-entropy.
fn accumulate_ce(model: &TinyNeuralLM, batch: &[TrainingExample], grad: &mut [f64]) -> Result<f64> {
    let shape = model.shape;
    let d = shape.dim;
    let v = shape.vocab_size;
    let scale = 1.0 / batch.len() as f64;
    let bias = shape.bias_offset();
    let mut ce = 0.0;
    let mut dh = vec![0.0; d];
    for ex in batch {
        if ex.target.index() >= v || ex.context.iter().any(|t| t.index() >= v) {
            return Err(Error::integrity("training example token outside vocabulary"));
        }
        let ctx = Context::new(&ex.context, shape.window)?;
        let h = model.hidden(&ctx);
        let z = model.logits_from_hidden(&h);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = z.iter().map(|&x| (x - m).exp()).collect();
        let s: f64 = p.iter().sum();
        ce -= (z[ex.target.index()] - m) - s.ln();
        p.iter_mut().for_each(|x| *x /= s);
        p[ex.target.index()] -= 1.0;

        dh.iter_mut().for_each(|x| *x = 0.0);
        for (y, &dl) in p.iter().enumerate() {
            let g = dl * scale;
            grad[bias + y] += g;
            let off = shape.projection_offset(y);
            let proj = &model.params[off..off + d];
            for j in 0..d {
                grad[off + j] += g * h[j];
                dh[j] += g * proj[j];
            }
        }
        let toks = ctx.tokens();
        if !toks.is_empty() {
            let inv = 1.0 / toks.len() as f64;
            for (slot, t) in toks.iter().rev().enumerate() {
                let off = shape.embedding_offset(slot, t.index());
                for j in 0..d {
                    grad[off + j] += dh[j] * inv;
                }
            }
        }
    }
    Ok(ce * scale)
}

fn require_anchor(model: &TinyNeuralLM) -> Result<&[f64]> {
    model
        .anchor
        .as_deref()
        .ok_or_else(|| Error::config("anchored loss needs a frozen anchor; call snapshot_anchor first"))
}

/// Loss `mean CE + λ‖θ − θ̂‖₁` and its (sub)gradient with respect to the
/// flat parameter vector. The L1 subgradient is `sign(θ_i − θ̂_i)`, and 0
/// within [`L1_KINK_TOLERANCE`] of the anchor.
pub fn anchored_loss(
    model: &TinyNeuralLM,
    batch: &[TrainingExample],
    lambda: f64,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let anchor = require_anchor(model)?;
    if batch.is_empty() {
        return Err(Error::config("anchored loss needs a non-empty batch"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let mut grad = vec![0.0; model.params.len()];
    let ce = accumulate_ce(model, batch, &mut grad)?;
    let mut l1 = 0.0;
    for ((g, &p), &a) in grad.iter_mut().zip(&model.params).zip(anchor) {
        let diff = p - a;
        l1 += diff.abs();
        if diff.abs() >= L1_KINK_TOLERANCE {
            *g += lambda * diff.signum();
        }
    }
    let l1_term = lambda * l1;
    Ok((
        LossBreakdown {
            ce,
            l1_term,
            total: ce + l1_term,
        },
        grad,
    ))
}

/// Mini-batch SGD on the anchored loss with seeded epoch shuffling.
///
/// The cross-entropy part takes a plain gradient step; the L1 part is
/// applied as a step toward the anchor that stops at the anchor instead of
/// overshooting it (soft thresholding). Coordinates without data pressure
/// therefore stay exactly pinned to `θ̂`.
///
/// Returns the trained model and one log record per step, holding the loss
/// at the parameters the step started from.
pub fn finetune_anchored(
    model: &TinyNeuralLM,
    dataset: &[TrainingExample],
    config: &TrainingConfig,
) -> Result<(TinyNeuralLM, Vec<TrainingLogRecord>)> {
    config.validate()?;
    let anchor = require_anchor(model)?.to_vec();
    let mut model = model.clone();
    if config.steps == 0 {
        return Ok((model, Vec::new()));
    }
    if dataset.is_empty() {
        return Err(Error::config("fine-tuning dataset is empty"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0usize;
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut grad = vec![0.0; model.params.len()];
    let mut log = Vec::with_capacity(config.steps);
    let shrink = config.learning_rate * config.lambda;

    for step in 0..config.steps {
        batch.clear();
        while batch.len() < config.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(dataset[order[cursor]].clone());
            cursor += 1;
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let ce = accumulate_ce(&model, &batch, &mut grad)?;
        let l1: f64 = model.params.iter().zip(&anchor).map(|(p, a)| (p - a).abs()).sum();
        let l1_term = config.lambda * l1;
        let total = ce + l1_term;
        if !total.is_finite() {
            return Err(Error::TrainingDiverged { step, loss: total });
        }
        log.push(TrainingLogRecord {
            step,
            ce_loss: ce,
            l1_term,
            total,
        });

        for ((p, g), &a) in model.params.iter_mut().zip(&grad).zip(&anchor) {
            let moved = *p - config.learning_rate * g;
            let diff = moved - a;
            *p = if shrink == 0.0 {
                moved
            } else if diff.abs() <= shrink {
                a
            } else {
                moved - shrink * diff.signum()
            };
        }
    }
    if let Some(i) = model.params.iter().position(|p| !p.is_finite()) {
        return Err(Error::TrainingDiverged {
            step: config.steps,
            loss: model.params[i],
        });
    }
    Ok((model, log))
}
