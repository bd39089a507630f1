use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Context, LanguageModel, LogitVector};
use crate::error::{Error, Result};
use crate::tokenization::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuralShape {
    pub vocab_size: usize,
    pub window: usize,
    pub dim: usize,
}

impl NeuralShape {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.window == 0 || self.dim == 0 {
            return Err(Error::config(format!("invalid neural model shape {self:?}")));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.window * self.vocab_size * self.dim + self.vocab_size * self.dim + self.vocab_size
    }

    #[inline]
    pub(crate) fn embedding_offset(&self, slot: usize, token: usize) -> usize {
        (slot * self.vocab_size + token) * self.dim
    }

    #[inline]
    pub(crate) fn projection_offset(&self, token: usize) -> usize {
        self.window * self.vocab_size * self.dim + token * self.dim
    }

    #[inline]
    pub(crate) fn bias_offset(&self) -> usize {
        self.window * self.vocab_size * self.dim + self.vocab_size * self.dim
    }
}

/// Log-linear window model: `logits = bias + P · mean_s E[s][token_s]`.
///
/// `E` holds one embedding table per window slot (slot 0 is the most recent
/// token), so the model is order-aware inside its window. All parameters
/// live in one flat vector so the anchored regularizer and the optimizer can
/// treat them uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyNeuralLM {
    pub(crate) shape: NeuralShape,
    pub(crate) params: Vec<f64>,
    pub(crate) anchor: Option<Vec<f64>>,
    pub(crate) digest: String,
}

impl TinyNeuralLM {
    pub fn zeros(shape: NeuralShape, vocab_digest: impl Into<String>) -> Result<Self> {
        shape.validate()?;
        Ok(TinyNeuralLM {
            shape,
            params: vec![0.0; shape.param_count()],
            anchor: None,
            digest: vocab_digest.into(),
        })
    }

    /// Parameters drawn uniformly from `[-scale, scale]`.
    pub fn random(shape: NeuralShape, scale: f64, seed: u64, vocab_digest: impl Into<String>) -> Result<Self> {
        let mut m = Self::zeros(shape, vocab_digest)?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::config(format!(
                "init scale must be finite and non-negative, got {scale}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut m.params {
            *p = scale * (2.0 * rng.gen::<f64>() - 1.0);
        }
        Ok(m)
    }

    pub(crate) fn from_parts(
        shape: NeuralShape,
        params: Vec<f64>,
        anchor: Option<Vec<f64>>,
        digest: String,
    ) -> Result<Self> {
        shape.validate()?;
        let n = shape.param_count();
        if params.len() != n || anchor.as_ref().is_some_and(|a| a.len() != n) {
            return Err(Error::integrity("parameter vector does not match model shape"));
        }
        if params.iter().chain(anchor.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::integrity("non-finite model parameter"));
        }
        Ok(TinyNeuralLM {
            shape,
            params,
            anchor,
            digest,
        })
    }

    pub fn shape(&self) -> NeuralShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn anchor(&self) -> Option<&[f64]> {
        self.anchor.as_deref()
    }

    /// Freeze the current parameters as the anchor `θ̂`.
    pub fn snapshot_anchor(&mut self) {
        self.anchor = Some(self.params.clone());
    }

    pub fn set_anchor(&mut self, anchor: Vec<f64>) -> Result<()> {
        if anchor.len() != self.params.len() {
            return Err(Error::config("anchor shape differs from the model"));
        }
        self.anchor = Some(anchor);
        Ok(())
    }

    pub fn clear_anchor(&mut self) {
        self.anchor = None;
    }

    /// `Σ |θ_i − θ̂_i|`, or `None` without an anchor.
    pub fn l1_to_anchor(&self) -> Option<f64> {
        self.anchor
            .as_ref()
            .map(|a| self.params.iter().zip(a).map(|(p, q)| (p - q).abs()).sum())
    }

    /// Mean of the slot embeddings of the context tokens.
    pub(crate) fn hidden(&self, ctx: &Context<'_>) -> Vec<f64> {
        let d = self.shape.dim;
        let mut h = vec![0.0; d];
        let toks = ctx.tokens();
        if toks.is_empty() {
            return h;
        }
        for (slot, t) in toks.iter().rev().enumerate() {
            let off = self.shape.embedding_offset(slot, t.index());
            for (hj, e) in h.iter_mut().zip(&self.params[off..off + d]) {
                *hj += e;
            }
        }
        let inv = 1.0 / toks.len() as f64;
        h.iter_mut().for_each(|x| *x *= inv);
        h
    }

    pub(crate) fn logits_from_hidden(&self, h: &[f64]) -> Vec<f64> {
        let d = self.shape.dim;
        let b = self.shape.bias_offset();
        (0..self.shape.vocab_size)
            .map(|y| {
                let off = self.shape.projection_offset(y);
                let dot: f64 = self.params[off..off + d].iter().zip(h).map(|(p, x)| p * x).sum();
                self.params[b + y] + dot
            })
            .collect()
    }

    /// Forward pass on an explicit context. Token ids must be below the
    /// vocabulary size.
    pub fn forward(&self, ctx: &Context<'_>) -> LogitVector {
        LogitVector::from_finite(self.logits_from_hidden(&self.hidden(ctx)))
    }
}

impl LanguageModel for TinyNeuralLM {
    fn vocab_size(&self) -> usize {
        self.shape.vocab_size
    }

    fn vocab_digest(&self) -> &str {
        &self.digest
    }

    fn context_window(&self) -> usize {
        self.shape.window
    }

    fn next_logits(&self, history: &[TokenId]) -> LogitVector {
        let ctx = Context::new(history, self.shape.window).expect("window validated at construction");
        self.forward(&ctx)
    }
}

/// Free-function form of the forward pass.
pub fn neural_forward(model: &TinyNeuralLM, ctx: &Context<'_>) -> LogitVector {
    model.forward(ctx)
}
