//! Near-access-free certificates for the logit ensemble.
//!
//! All divergences are in bits. For the equal-weight ensemble
//! `p ∝ √(p_l · p_s)` with `Z = Σ √(p_l · p_s)`:
//!
//! ```text
//! KL(p‖p_l) + KL(p‖p_s) = 2 · log₂(1/Z)
//! ```
//!
//! so `k_bound = 2 · log₂(1/Z)` bounds both divergences. For other weights
//! the bound is not proven; the certificate is then the directly computed
//! `max(KL(p‖p_l), KL(p‖p_s))` and `k_bound` is informational.
//!
//! The event bound: if `Y = log₂(p(y)/p_s(y))`, `y ∼ p`, has mean `k` and
//! leaves the interval `[(1−ε)k, (1+ε)k]` with probability `δ`, then every
//! event `E` satisfies `p(E) ≤ 2^{(1+ε)k} · p_s(E) + δ`.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Decoder, EnsembleSpec, GenerationRecord};
use crate::error::{Error, Result};
use crate::langmodel::{LanguageModel, ProbVector};
use crate::tokenization::TokenId;

/// Serde for bit values that may be the infinite-certificate sentinel,
/// written as the string `"inf"`.
pub mod bits_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// `Σ p_i · log₂(p_i / q_i)`, with `0 · log 0 = 0`.
pub fn kl_divergence_bits(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::integrity(format!(
            "distribution lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut s = 0.0;
    for (i, (&pi, &qi)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::domain(format!(
                "support violation at index {i}: p = {pi}, q = 0"
            )));
        }
        s += pi * (pi / qi).log2();
    }
    Ok(s.max(0.0))
}

/// Bhattacharyya coefficient and squared Hellinger distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    pub z: f64,
    pub h2: f64,
}

pub fn bhattacharyya_partition(p_l: &ProbVector, p_s: &ProbVector) -> Result<Partition> {
    if p_l.len() != p_s.len() {
        return Err(Error::integrity(format!(
            "distribution lengths differ: {} vs {}",
            p_l.len(),
            p_s.len()
        )));
    }
    let z: f64 = p_l
        .as_slice()
        .iter()
        .zip(p_s.as_slice())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    let z = z.min(1.0);
    Ok(Partition { z, h2: 1.0 - z })
}

/// `2 · log₂(1/Z)`; `f64::INFINITY` when the supports are disjoint.
pub fn naf_step_bound(p_l: &ProbVector, p_s: &ProbVector) -> Result<f64> {
    let Partition { z, .. } = bhattacharyya_partition(p_l, p_s)?;
    Ok(if z == 0.0 { f64::INFINITY } else { -2.0 * z.log2() })
}

/// Divergence accounting for one decode step, all in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    #[serde(with = "bits_or_inf")]
    pub kl_pl_bits: f64,
    #[serde(with = "bits_or_inf")]
    pub kl_ps_bits: f64,
    #[serde(with = "bits_or_inf")]
    pub k_bound_bits: f64,
}

impl StepRow {
    pub fn max_kl_bits(&self) -> f64 {
        self.kl_pl_bits.max(self.kl_ps_bits)
    }
}

fn logsumexp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn kl_from_logs(p: &[f64], log_p: &[f64], log_q: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(log_p.iter().zip(log_q))
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(pi, (lp, lq))| pi * (lp - lq))
        .sum();
    (s / LN_2).max(0.0)
}

/// Ledger row from natural-log ensemble and member distributions.
pub fn step_row(log_p: &[f64], log_pl: &[f64], log_ps: &[f64]) -> StepRow {
    let p: Vec<f64> = log_p.iter().map(|v| v.exp()).collect();
    let log_z = logsumexp(log_pl.iter().zip(log_ps).map(|(a, b)| 0.5 * (a + b))).min(0.0);
    let z = log_z.exp();
    StepRow {
        z,
        h2: 1.0 - z,
        kl_pl_bits: kl_from_logs(&p, log_p, log_pl),
        kl_ps_bits: kl_from_logs(&p, log_p, log_ps),
        k_bound_bits: if log_z == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            -2.0 * log_z / LN_2
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsDelta {
    pub eps: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub mean: f64,
    pub table: Vec<EpsDelta>,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::domain(format!("eps must be finite and non-negative, got {eps}")));
    }
    Ok(())
}

/// Whether `y` lies in the closed interval between `(1−ε)m` and `(1+ε)m`.
fn within(y: f64, mean: f64, eps: f64) -> bool {
    let (a, b) = ((1.0 - eps) * mean, (1.0 + eps) * mean);
    a.min(b) <= y && y <= a.max(b)
}

/// Empirical `δ̂(ε)`: the fraction of samples outside `[(1−ε)m, (1+ε)m]`,
/// `m` the sample mean.
pub fn estimate_concentration(samples: &[f64], eps_grid: &[f64]) -> Result<Concentration> {
    if samples.is_empty() {
        return Err(Error::domain("no samples to estimate concentration from"));
    }
    if samples.iter().any(|y| !y.is_finite()) {
        return Err(Error::domain("non-finite sample"));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let table = eps_grid
        .iter()
        .map(|&eps| {
            check_eps(eps)?;
            let out = samples.iter().filter(|&&y| !within(y, mean, eps)).count();
            Ok(EpsDelta {
                eps,
                delta: out as f64 / samples.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Concentration { mean, table })
}

/// The full outcome distribution of a fixed-length decode, enumerated.
///
/// Every sequence of exactly `horizon` tokens is an outcome; EOS is treated
/// as an ordinary token so the outcome space is the full product.
#[derive(Debug, Clone)]
pub struct SequenceOutcomes {
    pub sequences: Vec<Vec<TokenId>>,
    pub log_p: Vec<f64>,
    pub log_pl: Vec<f64>,
    pub log_ps: Vec<f64>,
    /// `Σ_t E_p[KL_t(p‖p_s)]`, the chain-rule decomposition of the
    /// sequence divergence.
    pub stepwise_kl_ps_bits: f64,
    pub stepwise_kl_pl_bits: f64,
}

pub const DEFAULT_ENUMERATION_CAP: usize = 4096;

pub fn enumerate_sequences(
    lm_l: &dyn LanguageModel,
    lm_s: &dyn LanguageModel,
    prompt: &[TokenId],
    spec: &EnsembleSpec,
    horizon: usize,
    cap: usize,
) -> Result<SequenceOutcomes> {
    let v = lm_l.vocab_size();
    let n = u32::try_from(horizon)
        .ok()
        .and_then(|h| v.checked_pow(h))
        .filter(|&n| n <= cap)
        .ok_or_else(|| Error::config(format!("|V|^L = {v}^{horizon} exceeds the enumeration cap {cap}")))?;
    let decoder = Decoder::new(lm_l, lm_s, spec)?.memoized();
    let mut out = SequenceOutcomes {
        sequences: Vec::with_capacity(n),
        log_p: Vec::with_capacity(n),
        log_pl: Vec::with_capacity(n),
        log_ps: Vec::with_capacity(n),
        stepwise_kl_ps_bits: 0.0,
        stepwise_kl_pl_bits: 0.0,
    };
    let mut history = prompt.to_vec();
    visit(&decoder, &mut history, prompt.len(), horizon, [0.0; 3], &mut out)?;
    Ok(out)
}

fn visit(
    decoder: &Decoder<'_>,
    history: &mut Vec<TokenId>,
    start: usize,
    horizon: usize,
    acc: [f64; 3],
    out: &mut SequenceOutcomes,
) -> Result<()> {
    let step = history.len() - start;
    if step == horizon {
        out.sequences.push(history[start..].to_vec());
        out.log_p.push(acc[0]);
        out.log_pl.push(acc[1]);
        out.log_ps.push(acc[2]);
        return Ok(());
    }
    let d = decoder.step(history, step)?;
    let reach = acc[0].exp();
    out.stepwise_kl_ps_bits += reach * d.row().kl_ps_bits;
    out.stepwise_kl_pl_bits += reach * d.row().kl_pl_bits;
    for y in 0..d.log_p.len() {
        history.push(TokenId(y as u32));
        let next = [acc[0] + d.log_p[y], acc[1] + d.log_pl[y], acc[2] + d.log_ps[y]];
        visit(decoder, history, start, horizon, next, out)?;
        history.pop();
    }
    Ok(())
}

/// Outcome of checking `p(E) ≤ 2^{(1+ε)k} · p_s(E) + δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBoundReport {
    pub outcomes: usize,
    /// `E_p[Y] = KL(p‖p_s)` in bits.
    pub k_bits: f64,
    pub eps: f64,
    /// Exact `Pr_p[Y ∉ [(1−ε)k, (1+ε)k]]`.
    pub delta: f64,
    pub factor: f64,
    pub events_checked: u64,
    pub exhaustive: bool,
    /// Largest `p(E) − factor · p_s(E) − δ` over the checked events.
    pub max_margin: f64,
    /// The same maximum over every event, attained by
    /// `{y : p(y) > factor · p_s(y)}`.
    pub worst_case_margin: f64,
}

impl EventBoundReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_margin <= tol && self.worst_case_margin <= tol
    }
}

pub const RANDOM_EVENTS: usize = 10_000;
const EXHAUSTIVE_LIMIT: usize = 9;

/// Checks the event bound over outcome masses `p`, `p_s` (natural logs),
/// with `δ` computed exactly for `eps`. Up to nine outcomes every event is
/// checked; beyond that, every singleton plus `RANDOM_EVENTS` random events
/// drawn from `seed`.
pub fn verify_event_bound(log_p: &[f64], log_ps: &[f64], eps: f64, seed: u64) -> Result<EventBoundReport> {
    check_eps(eps)?;
    if log_p.len() != log_ps.len() || log_p.is_empty() {
        return Err(Error::integrity(
            "outcome vectors must be non-empty and of equal length",
        ));
    }
    let p: Vec<f64> = log_p.iter().map(|v| v.exp()).collect();
    let ps: Vec<f64> = log_ps.iter().map(|v| v.exp()).collect();
    let y: Vec<f64> = log_p.iter().zip(log_ps).map(|(a, b)| (a - b) / LN_2).collect();
    if p.iter().zip(&ps).any(|(&a, &b)| a > 0.0 && b == 0.0) {
        return Err(Error::domain("p puts mass where p_s has none"));
    }
    let k: f64 = p
        .iter()
        .zip(&y)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(pi, yi)| pi * yi)
        .sum();
    let delta: f64 = p
        .iter()
        .zip(&y)
        .filter(|(&pi, &yi)| pi > 0.0 && !within(yi, k, eps))
        .map(|(pi, _)| pi)
        .sum();
    let factor = ((1.0 + eps) * k).exp2();
    let excess: Vec<f64> = p.iter().zip(&ps).map(|(a, b)| a - factor * b).collect();
    let worst_case_margin = excess.iter().map(|e| e.max(0.0)).sum::<f64>() - delta;

    let n = p.len();
    let margin = |members: &mut dyn Iterator<Item = usize>| {
        let (mut pe, mut pse) = (0.0, 0.0);
        for i in members {
            pe += p[i];
            pse += ps[i];
        }
        pe - factor * pse - delta
    };
    let mut max_margin = f64::NEG_INFINITY;
    let (events_checked, exhaustive) = if n <= EXHAUSTIVE_LIMIT {
        for mask in 0u32..(1 << n) {
            let m = margin(&mut (0..n).filter(|i| mask >> i & 1 == 1));
            max_margin = max_margin.max(m);
        }
        (1u64 << n, true)
    } else {
        for i in 0..n {
            max_margin = max_margin.max(margin(&mut std::iter::once(i)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut members = Vec::with_capacity(n);
        for _ in 0..RANDOM_EVENTS {
            members.clear();
            members.extend((0..n).filter(|_| rng.gen::<bool>()));
            max_margin = max_margin.max(margin(&mut members.iter().copied()));
        }
        ((n + RANDOM_EVENTS) as u64, false)
    };
    Ok(EventBoundReport {
        outcomes: n,
        k_bits: k,
        eps,
        delta,
        factor,
        events_checked,
        exhaustive,
        max_margin,
        worst_case_margin,
    })
}

/// One certificate report line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub row: StepRow,
    #[serde(with = "bits_or_inf")]
    pub max_kl_bits: f64,
}

impl LedgerRow {
    /// Equal weights: the partition bound is a proven certificate.
    pub fn equal_weight(&self) -> bool {
        self.alpha == 0.5 && self.beta == 0.5
    }

    /// `k_bound` for equal weights, the direct max-KL otherwise.
    pub fn certificate_bits(&self) -> f64 {
        if self.equal_weight() {
            self.row.k_bound_bits
        } else {
            self.max_kl_bits
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    /// Per-step sum of `2 · log₂(1/Z)`.
    #[serde(with = "bits_or_inf")]
    pub cum_k_bound: f64,
    #[serde(with = "bits_or_inf")]
    pub cum_kl_pl_bits: f64,
    #[serde(with = "bits_or_inf")]
    pub cum_kl_ps_bits: f64,
    #[serde(with = "bits_or_inf")]
    pub cum_max_kl_bits: f64,
    /// Per-step sum of [`LedgerRow::certificate_bits`].
    #[serde(with = "bits_or_inf")]
    pub cum_certificate_bits: f64,
    #[serde(rename = "mean_Y")]
    pub mean_y: f64,
    pub eps_delta_table: Vec<EpsDelta>,
}

/// Per-step and cumulative divergences for one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceLedger {
    pub rows: Vec<LedgerRow>,
    pub y_bits: Vec<f64>,
    pub summary: LedgerSummary,
}

impl DivergenceLedger {
    pub fn new(rows: Vec<LedgerRow>, y_bits: Vec<f64>, eps_grid: &[f64]) -> Result<Self> {
        let sum = |f: &dyn Fn(&LedgerRow) -> f64| rows.iter().map(f).sum::<f64>();
        let (mean_y, eps_delta_table) = if y_bits.is_empty() {
            (0.0, Vec::new())
        } else {
            let c = estimate_concentration(&y_bits, eps_grid)?;
            (c.mean, c.table)
        };
        let summary = LedgerSummary {
            cum_k_bound: sum(&|r| r.row.k_bound_bits),
            cum_kl_pl_bits: sum(&|r| r.row.kl_pl_bits),
            cum_kl_ps_bits: sum(&|r| r.row.kl_ps_bits),
            cum_max_kl_bits: sum(&|r| r.max_kl_bits),
            cum_certificate_bits: sum(&|r| r.certificate_bits()),
            mean_y,
            eps_delta_table,
        };
        Ok(DivergenceLedger { rows, y_bits, summary })
    }

    /// Rows as JSON lines followed by the summary line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        s.push_str(&serde_json::to_string(&self.summary)?);
        s.push('\n');
        Ok(s)
    }
}

/// Tolerance when replaying a stored generation against the models.
pub const REPLAY_TOLERANCE: f64 = 1e-9;

/// Recomputes each step's distributions for `record` and builds its ledger.
/// A record that does not replay against the given models is an integrity
/// error.
pub fn certify_generation(
    record: &GenerationRecord,
    lm_l: &dyn LanguageModel,
    lm_s: &dyn LanguageModel,
    eps_grid: &[f64],
) -> Result<DivergenceLedger> {
    record.check()?;
    let decoder = Decoder::new(lm_l, lm_s, &record.spec)?;
    let mut history = record.prompt_ids.clone();
    let mut rows = Vec::with_capacity(record.output_ids.len());
    for (t, &tok) in record.output_ids.iter().enumerate() {
        let d = decoder.step(&history, t)?;
        let lp = *d
            .log_p
            .get(tok.index())
            .ok_or_else(|| Error::integrity(format!("output token {tok} out of range")))?;
        if (lp - record.logp_p[t]).abs() > REPLAY_TOLERANCE {
            return Err(Error::integrity(format!(
                "step {t}: stored log p = {} but the models give {lp}",
                record.logp_p[t]
            )));
        }
        rows.push(ledger_row(t, d.alpha, d.beta, d.row()));
        history.push(tok);
    }
    DivergenceLedger::new(rows, record.y_bits.clone(), eps_grid)
}

pub(crate) fn ledger_row(step: usize, alpha: f64, beta: f64, row: &StepRow) -> LedgerRow {
    LedgerRow {
        step,
        alpha,
        beta,
        row: *row,
        max_kl_bits: row.max_kl_bits(),
    }
}
