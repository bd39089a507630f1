//! Brute-force oracles and fixtures shared by the integration tests and
//! the acceptance target. Oracles are deliberately naive: no hashing, no
//! binary search, no log-space tricks beyond what the definition needs.

#![allow(dead_code)]

pub mod criteria;

use std::collections::BTreeSet;

use logit_purify::harness::config::Config;
use logit_purify::langmodel::ProbVector;
use logit_purify::metrics::fingerprint_hashes;
use logit_purify::tokenization::TokenId;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn toks(v: &[u32]) -> Vec<TokenId> {
    v.iter().map(|&t| TokenId(t)).collect()
}

pub fn random_seq(rng: &mut ChaCha8Rng, alphabet: u32, max_len: usize) -> Vec<TokenId> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| TokenId(rng.gen_range(0..alphabet))).collect()
}

/// A full-support distribution with a spread of magnitudes.
pub fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| (rng.gen_range(-4.0..4.0f64)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn pv(v: &[f64]) -> ProbVector {
    ProbVector::new(v.to_vec()).unwrap()
}

pub fn kl_bits_naive(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).log2())
        .sum()
}

/// Reference k-grams (as distinct token vectors) present in the generation.
pub fn kgram_oracle(gen: &[TokenId], reference: &[TokenId], k: usize) -> usize {
    if k == 0 || reference.len() < k {
        return 0;
    }
    let grams: BTreeSet<&[TokenId]> = reference.windows(k).collect();
    grams.into_iter().filter(|g| gen.windows(k).any(|w| w == *g)).count()
}

/// Longest common substring by the textbook dynamic program.
pub fn em_oracle(a: &[TokenId], b: &[TokenId]) -> usize {
    let mut best = 0;
    let mut prev = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        let mut cur = vec![0usize; b.len() + 1];
        for j in 1..=b.len() {
            if a[i - 1] == b[j - 1] {
                cur[j] = prev[j - 1] + 1;
                best = best.max(cur[j]);
            }
        }
        prev = cur;
    }
    best
}

pub fn contains_naive(hay: &[TokenId], needle: &[TokenId]) -> bool {
    !needle.is_empty() && needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

pub fn leaked_oracle(gens: &[Vec<TokenId>], secrets: &[Vec<TokenId>]) -> usize {
    let distinct: BTreeSet<&Vec<TokenId>> = secrets.iter().collect();
    distinct
        .into_iter()
        .filter(|s| gens.iter().any(|g| contains_naive(g, s)))
        .count()
}

/// Winnowing with every window materialized.
pub fn winnow_oracle(seq: &[TokenId], k: usize, w: usize) -> BTreeSet<u64> {
    let h = fingerprint_hashes(seq, k);
    let mut out = BTreeSet::new();
    if h.is_empty() {
        return out;
    }
    if h.len() < w {
        out.insert(*h.iter().min().unwrap());
        return out;
    }
    for win in h.windows(w) {
        out.insert(*win.iter().min().unwrap());
    }
    out
}

pub fn winnow_similarity_oracle(gen: &[TokenId], reference: &[TokenId], k: usize, w: usize) -> f64 {
    let fr = winnow_oracle(reference, k, w);
    if fr.is_empty() {
        return 0.0;
    }
    let fg = winnow_oracle(gen, k, w);
    fr.iter().filter(|h| fg.contains(h)).count() as f64 / fr.len() as f64
}

/// Fraction of the k-subsets of n samples (the first c correct) that
/// contain a correct sample, by enumerating every subset.
pub fn pass_at_k_oracle(n: u64, c: u64, k: u64) -> f64 {
    let (mut hit, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as u64 != k {
            continue;
        }
        total += 1;
        if (0..c).any(|i| mask >> i & 1 == 1) {
            hit += 1;
        }
    }
    hit as f64 / total as f64
}

/// A configuration small enough to build and sweep in seconds.
pub fn small_config() -> Config {
    let mut cfg = Config::default();
    cfg.craft.count = 24;
    cfg.craft.clean_tokens = 4_000;
    cfg.craft.heldout_tokens = 300;
    cfg.train.steps = 400;
    cfg.inject.steps = 600;
    cfg.sweep.alphas = vec![1.0, 0.5, 0.0];
    cfg.sweep.temperatures = vec![0.5, 1.0];
    cfg.sweep.generations = 3;
    cfg.sweep.max_len = 10;
    cfg
}
