//! Next-token models sharing one contract: given a token history, produce a
//! finite logit vector over the shared vocabulary.
//!
//! Two trained families live here (a smoothed n-gram model standing in for
//! the benign small model, and a tiny log-linear neural model that gets
//! fine-tuned into the untrusted one) plus a pair of synthetic models used
//! by tests and examples.

mod neural;
mod ngram;
mod synthetic;
mod training;

pub mod io;

pub use neural::{neural_forward, NeuralShape, TinyNeuralLM};
pub use ngram::{train_ngram, NGramModel};
pub(crate) use synthetic::splitmix64;
pub use synthetic::{ConstantModel, HashedModel};
pub use training::{
    anchored_loss, finetune_anchored, LossBreakdown, TrainingConfig, TrainingExample, TrainingLogRecord,
};

use crate::error::{Error, Result};
use crate::tokenization::TokenId;

/// Raw per-token scores; every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::integrity(format!("non-finite logit at index {i}")));
        }
        Ok(LogitVector(values))
    }

    /// Caller guarantees finiteness.
    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        LogitVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Probabilities over the vocabulary; non-negative, summing to one within
/// `1e-9`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("empty probability vector"));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain(format!(
                "invalid probability at index {i}: {}",
                values[i]
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::domain(format!("probabilities sum to {sum}")));
        }
        Ok(ProbVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Smallest index among the maximal entries.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!(
            "temperature must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

fn check_finite(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::integrity("empty logit vector"));
    }
    match z.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::integrity(format!("non-finite logit at index {i}"))),
        None => Ok(()),
    }
}

fn max_of(z: &[f64]) -> f64 {
    z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `p_i ∝ exp(z_i / T)`, stabilized by subtracting the maximum.
pub fn softmax_with_temperature(z: &[f64], temperature: f64) -> Result<ProbVector> {
    check_temperature(temperature)?;
    check_finite(z)?;
    let m = max_of(z);
    let mut e: Vec<f64> = z.iter().map(|&v| ((v - m) / temperature).exp()).collect();
    let s: f64 = e.iter().sum();
    for v in &mut e {
        *v /= s;
    }
    Ok(ProbVector(e))
}

/// Natural-log probabilities of [`softmax_with_temperature`], computed
/// without passing through the (possibly underflowing) probabilities.
pub fn log_softmax_with_temperature(z: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_temperature(temperature)?;
    check_finite(z)?;
    let m = max_of(z);
    let scaled: Vec<f64> = z.iter().map(|&v| (v - m) / temperature).collect();
    let lse = scaled.iter().map(|v| v.exp()).sum::<f64>().ln();
    Ok(scaled.into_iter().map(|v| v - lse).collect())
}

/// The next-token contract shared by every model.
pub trait LanguageModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// Digest of the vocabulary the model was built against.
    fn vocab_digest(&self) -> &str;

    /// How many trailing history tokens the output depends on.
    fn context_window(&self) -> usize;

    fn next_logits(&self, history: &[TokenId]) -> LogitVector;
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn vocab_digest(&self) -> &str {
        (**self).vocab_digest()
    }
    fn context_window(&self) -> usize {
        (**self).context_window()
    }
    fn next_logits(&self, history: &[TokenId]) -> LogitVector {
        (**self).next_logits(history)
    }
}

/// The bounded suffix of a history a model actually conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context<'a> {
    tokens: &'a [TokenId],
    window: usize,
}

impl<'a> Context<'a> {
    pub fn new(history: &'a [TokenId], window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::config("context window must be at least 1"));
        }
        let start = history.len().saturating_sub(window);
        Ok(Context {
            tokens: &history[start..],
            window,
        })
    }

    pub fn tokens(&self) -> &'a [TokenId] {
        self.tokens
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

/// `exp(mean NLL)` in nats per predicted token. Each document is scored
/// token by token and then on predicting EOS after its last token.
///
/// `next_log_probs(history, position)` must return natural-log
/// probabilities over the vocabulary.
pub fn perplexity_with<F>(docs: &[Vec<TokenId>], mut next_log_probs: F) -> Result<f64>
where
    F: FnMut(&[TokenId], usize) -> Result<Vec<f64>>,
{
    let mut nll = 0.0;
    let mut count = 0usize;
    let mut history: Vec<TokenId> = Vec::new();
    for doc in docs {
        for pos in 0..=doc.len() {
            let target = doc.get(pos).copied().unwrap_or(TokenId::EOS);
            history.clear();
            history.extend_from_slice(&doc[..pos]);
            let lp = next_log_probs(&history, pos)?;
            let v = *lp
                .get(target.index())
                .ok_or_else(|| Error::integrity(format!("token {target} outside model vocabulary")))?;
            if !v.is_finite() {
                return Err(Error::domain(format!("token {target} has zero probability")));
            }
            nll -= v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::domain("perplexity of an empty corpus"));
    }
    Ok((nll / count as f64).exp())
}

/// Perplexity of a single model at unit temperature.
pub fn perplexity<M: LanguageModel + ?Sized>(model: &M, docs: &[Vec<TokenId>]) -> Result<f64> {
    perplexity_with(docs, |h, _| {
        log_softmax_with_temperature(model.next_logits(h).as_slice(), 1.0)
    })
}
