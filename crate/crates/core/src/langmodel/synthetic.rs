use super::{LanguageModel, LogitVector};
use crate::error::{Error, Result};
use crate::tokenization::TokenId;

/// Same logits after every history.
#[derive(Debug, Clone)]
pub struct ConstantModel {
    logits: LogitVector,
    digest: String,
}

impl ConstantModel {
    pub fn new(logits: Vec<f64>, vocab_digest: impl Into<String>) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::config("constant model needs at least one logit"));
        }
        Ok(ConstantModel {
            logits: LogitVector::new(logits)?,
            digest: vocab_digest.into(),
        })
    }

    /// Logits `ln p`; `p` must have full support.
    pub fn from_probs(probs: &[f64], vocab_digest: impl Into<String>) -> Result<Self> {
        if probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::domain("constant model needs full-support probabilities"));
        }
        Self::new(probs.iter().map(|p| p.ln()).collect(), vocab_digest)
    }
}

impl LanguageModel for ConstantModel {
    fn vocab_size(&self) -> usize {
        self.logits.len()
    }
    fn vocab_digest(&self) -> &str {
        &self.digest
    }
    fn context_window(&self) -> usize {
        0
    }
    fn next_logits(&self, _history: &[TokenId]) -> LogitVector {
        self.logits.clone()
    }
}

/// Pseudo-random but fully deterministic logits in `[-scale, scale]`, keyed
/// by `(seed, last window tokens, candidate)`. A cheap stand-in for an
/// arbitrary history-dependent model in exhaustive checks.
#[derive(Debug, Clone)]
pub struct HashedModel {
    vocab_size: usize,
    window: usize,
    scale: f64,
    seed: u64,
    digest: String,
}

impl HashedModel {
    pub fn new(
        vocab_size: usize,
        window: usize,
        scale: f64,
        seed: u64,
        vocab_digest: impl Into<String>,
    ) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::config("vocabulary size must be positive"));
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::config("scale must be finite and non-negative"));
        }
        Ok(HashedModel {
            vocab_size,
            window,
            scale,
            seed,
            digest: vocab_digest.into(),
        })
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl LanguageModel for HashedModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
    fn vocab_digest(&self) -> &str {
        &self.digest
    }
    fn context_window(&self) -> usize {
        self.window
    }
    fn next_logits(&self, history: &[TokenId]) -> LogitVector {
        let start = history.len().saturating_sub(self.window);
        let mut h = splitmix64(self.seed);
        for t in &history[start..] {
            h = splitmix64(h ^ u64::from(t.0));
        }
        // history length inside the window matters too
        h = splitmix64(h ^ ((history.len() - start) as u64) << 40);
        let logits = (0..self.vocab_size)
            .map(|i| {
                let u = (splitmix64(h ^ i as u64) >> 11) as f64 / (1u64 << 53) as f64;
                self.scale * (2.0 * u - 1.0)
            })
            .collect();
        LogitVector::from_finite(logits)
    }
}
