use std::collections::HashMap;

use super::{LanguageModel, LogitVector};
use crate::error::{Error, Result};
use crate::tokenization::{TokenId, Vocabulary};

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct ContextCounts {
    pub(crate) total: u64,
    pub(crate) next: HashMap<TokenId, u64>,
}

/// Add-k smoothed n-gram model.
///
/// Documents are padded on the left with `order - 1` EOS tokens, so a
/// history shorter than `order - 1` is read as the start of a document.
///
/// With `backoff` on (the default) the prediction uses the longest suffix of
/// the history, at most `order - 1` tokens, that occurred in training; the
/// empty context always has. With it off, the model always uses the full
/// `order - 1` suffix and an unseen context yields pure smoothing (uniform).
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    pub(crate) order: usize,
    pub(crate) add_k: f64,
    pub(crate) backoff: bool,
    pub(crate) vocab_size: usize,
    pub(crate) digest: String,
    pub(crate) counts: HashMap<Vec<TokenId>, ContextCounts>,
}

pub fn train_ngram(corpus: &[Vec<TokenId>], vocab: &Vocabulary, order: usize, add_k: f64) -> Result<NGramModel> {
    if corpus.is_empty() {
        return Err(Error::config("cannot train an n-gram model on an empty corpus"));
    }
    if order == 0 {
        return Err(Error::config("n-gram order must be at least 1"));
    }
    if !(add_k.is_finite() && add_k > 0.0) {
        return Err(Error::config(format!("add_k must be positive, got {add_k}")));
    }
    let mut counts: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
    let mut seq = Vec::new();
    for doc in corpus {
        vocab.check(doc)?;
        seq.clear();
        seq.resize(order - 1, TokenId::EOS);
        seq.extend_from_slice(doc);
        seq.push(TokenId::EOS);
        for i in order - 1..seq.len() {
            for len in 0..order {
                let e = counts.entry(seq[i - len..i].to_vec()).or_default();
                e.total += 1;
                *e.next.entry(seq[i]).or_insert(0) += 1;
            }
        }
    }
    Ok(NGramModel {
        order,
        add_k,
        backoff: true,
        vocab_size: vocab.len(),
        digest: vocab.digest(),
        counts,
    })
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add_k(&self) -> f64 {
        self.add_k
    }

    pub fn backoff(&self) -> bool {
        self.backoff
    }

    pub fn with_backoff(mut self, backoff: bool) -> Self {
        self.backoff = backoff;
        self
    }

    /// The last `order - 1` tokens of the EOS-padded history.
    fn padded<'h>(&self, history: &'h [TokenId]) -> std::borrow::Cow<'h, [TokenId]> {
        let need = self.order - 1;
        if history.len() >= need {
            std::borrow::Cow::Borrowed(&history[history.len() - need..])
        } else {
            let mut v = vec![TokenId::EOS; need - history.len()];
            v.extend_from_slice(history);
            std::borrow::Cow::Owned(v)
        }
    }

    fn context_len(&self, padded: &[TokenId]) -> usize {
        if !self.backoff {
            return padded.len();
        }
        (0..=padded.len())
            .rev()
            .find(|&len| self.counts.contains_key(&padded[padded.len() - len..]))
            .unwrap_or(0)
    }

    /// The (EOS-padded) context the model conditions on for `history`.
    pub fn matched_context(&self, history: &[TokenId]) -> Vec<TokenId> {
        let padded = self.padded(history);
        padded[padded.len() - self.context_len(&padded)..].to_vec()
    }
}

impl LanguageModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn vocab_digest(&self) -> &str {
        &self.digest
    }

    fn context_window(&self) -> usize {
        self.order - 1
    }

    fn next_logits(&self, history: &[TokenId]) -> LogitVector {
        let v = self.vocab_size as f64;
        let padded = self.padded(history);
        let len = self.context_len(&padded);
        let counts = self.counts.get(&padded[padded.len() - len..]);
        let total = counts.map_or(0, |c| c.total) as f64;
        let denom = (total + self.add_k * v).ln();
        let mut logits = vec![self.add_k.ln() - denom; self.vocab_size];
        if let Some(c) = counts {
            for (&t, &n) in &c.next {
                logits[t.index()] = (n as f64 + self.add_k).ln() - denom;
            }
        }
        LogitVector::from_finite(logits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langmodel::{perplexity, softmax_with_temperature};
    use crate::tokenization::build_vocabulary;

    fn setup(text: &str) -> (Vocabulary, Vec<Vec<TokenId>>) {
        let v = build_vocabulary(&[text], 100).unwrap();
        let docs = vec![v.encode(text)];
        (v, docs)
    }

    fn probs(m: &NGramModel, h: &[TokenId]) -> Vec<f64> {
        softmax_with_temperature(m.next_logits(h).as_slice(), 1.0)
            .unwrap()
            .into_inner()
    }

    #[test]
    fn bigram_hand_count() {
        // "a b a b": a is followed by b twice; |V| = 4
        let (v, docs) = setup("a b a b");
        let m = train_ngram(&docs, &v, 2, 1.0).unwrap();
        let p = probs(&m, &[v.id("a").unwrap()]);
        let b = v.id("b").unwrap().index();
        assert!((p[b] - 3.0 / 6.0).abs() < 1e-12);
        assert!((p[b] - (2.0 + 1.0) / (2.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn unseen_context_without_backoff_is_uniform() {
        let (v, docs) = setup("a b a b");
        let m = train_ngram(&docs, &v, 2, 1.0).unwrap().with_backoff(false);
        // UNK never occurs in training
        let p = probs(&m, &[TokenId::UNK]);
        for x in p {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn unseen_context_with_backoff_uses_unigram() {
        let (v, docs) = setup("a b a b");
        let m = train_ngram(&docs, &v, 2, 1.0).unwrap();
        assert!(m.matched_context(&[TokenId::UNK]).is_empty());
        let p = probs(&m, &[TokenId::UNK]);
        // unigram counts: a 2, b 2, eos 1 over 5 events
        let a = v.id("a").unwrap().index();
        assert!((p[a] - 3.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_corpus_concentrates_mass() {
        let (v, docs) = setup("a a a");
        let m = train_ngram(&docs, &v, 1, 1e-9).unwrap();
        let p = probs(&m, &[v.id("a").unwrap()]);
        // 3 of 4 training events are "a", the fourth is EOS
        assert!((p[v.id("a").unwrap().index()] - 0.75).abs() < 1e-8);
        assert!(p[TokenId::UNK.index()] < 1e-8);
    }

    #[test]
    fn every_reachable_context_normalizes() {
        let text = "the cat sat on the mat . the dog sat on the cat .";
        let (v, docs) = setup(text);
        let m = train_ngram(&docs, &v, 3, 0.1).unwrap();
        for ctx in m.counts.keys() {
            let s: f64 = probs(&m, ctx).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(m.next_logits(ctx).as_slice().iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn deterministic_string_has_perplexity_near_one() {
        let (v, docs) = setup("x y z");
        let m = train_ngram(&docs, &v, 2, 1e-12).unwrap();
        let ppl = perplexity(&m, &docs).unwrap();
        assert!((ppl - 1.0).abs() < 1e-9, "{ppl}");
    }

    #[test]
    fn parameter_errors() {
        let (v, docs) = setup("a");
        assert!(matches!(train_ngram(&[], &v, 2, 1.0), Err(Error::Config(_))));
        assert!(matches!(train_ngram(&docs, &v, 0, 1.0), Err(Error::Config(_))));
        assert!(matches!(train_ngram(&docs, &v, 2, 0.0), Err(Error::Config(_))));
        assert!(matches!(
            train_ngram(&[vec![TokenId(99)]], &v, 2, 1.0),
            Err(Error::Integrity(_))
        ));
    }
}
