//! Logit-level ensemble of an untrusted and a benign model.
//!
//! Per step `t` the next-token distribution is
//!
//! ```text
//! p(·|x) = softmax((α_t · z_l/T_l + β_t · z_s/T_s) / T)
//! ```
//!
//! where `z_l`, `z_s` are the member logits, `T_l`, `T_s` the member
//! temperatures and `T` the sampling temperature. With `α + β = 1` this is
//! the normalized weighted geometric mean `p_l^α p_s^β / Σ p_l^α p_s^β` of
//! the tempered member distributions; `α = β = 1/2` is the construction the
//! near-access-free certificate is proven for.

use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::StepRow;
use crate::error::{Error, Result};
use crate::langmodel::{
    argmax, log_softmax_with_temperature, softmax_with_temperature, LanguageModel, LogitVector, ProbVector,
};
use crate::tokenization::TokenId;

/// Weight of the untrusted member as a function of the decode step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSchedule {
    Constant {
        alpha: f64,
    },
    /// Each segment covers the steps before its `until`; steps past the last
    /// segment use `rest`.
    Piecewise {
        segments: Vec<ScheduleSegment>,
        rest: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub until: usize,
    pub alpha: f64,
}

impl AlphaSchedule {
    pub fn constant(alpha: f64) -> Self {
        AlphaSchedule::Constant { alpha }
    }

    /// `head_alpha` for the first `head_steps` steps, `rest_alpha` after.
    pub fn head_then(head_steps: usize, head_alpha: f64, rest_alpha: f64) -> Self {
        AlphaSchedule::Piecewise {
            segments: vec![ScheduleSegment {
                until: head_steps,
                alpha: head_alpha,
            }],
            rest: rest_alpha,
        }
    }

    pub fn alpha_at(&self, step: usize) -> f64 {
        match self {
            AlphaSchedule::Constant { alpha } => *alpha,
            AlphaSchedule::Piecewise { segments, rest } => {
                segments.iter().find(|s| step < s.until).map_or(*rest, |s| s.alpha)
            }
        }
    }

    /// Every α value the schedule can produce.
    pub fn values(&self) -> Vec<f64> {
        match self {
            AlphaSchedule::Constant { alpha } => vec![*alpha],
            AlphaSchedule::Piecewise { segments, rest } => {
                segments.iter().map(|s| s.alpha).chain(std::iter::once(*rest)).collect()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        let v = self.values();
        v.iter().all(|a| a.to_bits() == v[0].to_bits())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.values().into_iter().find(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {a}")));
        }
        if let AlphaSchedule::Piecewise { segments, .. } = self {
            if segments.windows(2).any(|w| w[0].until >= w[1].until) {
                return Err(Error::config("schedule segments must have increasing `until`"));
            }
        }
        Ok(())
    }
}

/// Everything that determines one decode session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub schedule: AlphaSchedule,
    /// Fixed β; `None` means `β_t = 1 − α_t`.
    #[serde(default)]
    pub beta: Option<f64>,
    pub t_l: f64,
    pub t_s: f64,
    pub temperature: f64,
    /// Argmax decoding; the sampling temperature is then irrelevant.
    #[serde(default)]
    pub greedy: bool,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            schedule: AlphaSchedule::constant(0.5),
            beta: None,
            t_l: 1.0,
            t_s: 1.0,
            temperature: 1.0,
            greedy: false,
            max_len: 16,
            seed: 0,
        }
    }
}

impl EnsembleSpec {
    pub fn constant(alpha: f64) -> Self {
        EnsembleSpec {
            schedule: AlphaSchedule::constant(alpha),
            ..EnsembleSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        for (name, t) in [("t_l", self.t_l), ("t_s", self.t_s), ("temperature", self.temperature)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {t}")));
            }
        }
        if let Some(b) = self.beta {
            if !b.is_finite() {
                return Err(Error::config("beta must be finite"));
            }
            if let Some(a) = self.schedule.values().into_iter().find(|a| a + b <= 0.0) {
                return Err(Error::config(format!(
                    "alpha + beta must be positive (alpha = {a}, beta = {b})"
                )));
            }
        }
        Ok(())
    }

    pub fn weights(&self, step: usize) -> (f64, f64) {
        let a = self.schedule.alpha_at(step);
        (a, self.beta.unwrap_or(1.0 - a))
    }
}

/// `α · z_l + β · z_s`, unnormalized.
pub fn combine_logits(z_l: &[f64], z_s: &[f64], alpha: f64, beta: f64) -> Result<LogitVector> {
    if z_l.len() != z_s.len() {
        return Err(Error::integrity(format!(
            "member logit lengths differ: {} vs {}",
            z_l.len(),
            z_s.len()
        )));
    }
    if !(alpha.is_finite() && beta.is_finite()) {
        return Err(Error::domain("ensemble weights must be finite"));
    }
    LogitVector::new(z_l.iter().zip(z_s).map(|(l, s)| alpha * l + beta * s).collect())
}

/// Both members must use the same vocabulary.
pub fn check_members(lm_l: &dyn LanguageModel, lm_s: &dyn LanguageModel) -> Result<()> {
    if lm_l.vocab_size() != lm_s.vocab_size() || lm_l.vocab_digest() != lm_s.vocab_digest() {
        return Err(Error::config(format!(
            "ensemble members use different vocabularies ({} tokens, {} vs {} tokens, {})",
            lm_l.vocab_size(),
            lm_l.vocab_digest(),
            lm_s.vocab_size(),
            lm_s.vocab_digest()
        )));
    }
    Ok(())
}

fn scale(z: &LogitVector, t: f64) -> Vec<f64> {
    z.as_slice().iter().map(|v| v / t).collect()
}

/// The ensemble's next-token distribution at `step`.
pub fn ensemble_next_distribution(
    lm_l: &dyn LanguageModel,
    lm_s: &dyn LanguageModel,
    history: &[TokenId],
    spec: &EnsembleSpec,
    step: usize,
) -> Result<ProbVector> {
    check_members(lm_l, lm_s)?;
    spec.validate()?;
    let (a, b) = spec.weights(step);
    let zl = scale(&lm_l.next_logits(history), spec.t_l);
    let zs = scale(&lm_s.next_logits(history), spec.t_s);
    softmax_with_temperature(combine_logits(&zl, &zs, a, b)?.as_slice(), spec.temperature)
}

/// Per-step distributions at the sampling temperature: the ensemble and
/// each member tempered the same way (`softmax(z_m / (T_m · T))`), all in
/// natural-log form.
#[derive(Debug)]
pub struct StepDistributions {
    pub alpha: f64,
    pub beta: f64,
    pub p: ProbVector,
    pub log_p: Vec<f64>,
    pub log_pl: Vec<f64>,
    pub log_ps: Vec<f64>,
    row: OnceCell<StepRow>,
}

impl StepDistributions {
    /// Divergence accounting for this step, computed once.
    pub fn row(&self) -> &StepRow {
        self.row
            .get_or_init(|| crate::certificate::step_row(&self.log_p, &self.log_pl, &self.log_ps))
    }
}

type CacheKey = (Vec<TokenId>, u64, u64);

/// Runs decode sessions for one member pair and spec.
///
/// With memoization on, step distributions are cached by the part of the
/// history the members can see plus the step weights; this is exact, and
/// pays off when many samples share prefixes.
pub struct Decoder<'m> {
    lm_l: &'m dyn LanguageModel,
    lm_s: &'m dyn LanguageModel,
    spec: &'m EnsembleSpec,
    window: usize,
    cache: Option<RefCell<HashMap<CacheKey, Rc<StepDistributions>>>>,
}

impl<'m> Decoder<'m> {
    pub fn new(lm_l: &'m dyn LanguageModel, lm_s: &'m dyn LanguageModel, spec: &'m EnsembleSpec) -> Result<Self> {
        check_members(lm_l, lm_s)?;
        spec.validate()?;
        Ok(Decoder {
            lm_l,
            lm_s,
            spec,
            window: lm_l.context_window().max(lm_s.context_window()),
            cache: None,
        })
    }

    pub fn memoized(mut self) -> Self {
        self.cache = Some(RefCell::new(HashMap::new()));
        self
    }

    pub fn spec(&self) -> &EnsembleSpec {
        self.spec
    }

    pub fn step(&self, history: &[TokenId], step: usize) -> Result<Rc<StepDistributions>> {
        let (alpha, beta) = self.spec.weights(step);
        let Some(cache) = &self.cache else {
            return self.compute(history, alpha, beta).map(Rc::new);
        };
        let suffix = &history[history.len().saturating_sub(self.window)..];
        let key = (suffix.to_vec(), alpha.to_bits(), beta.to_bits());
        if let Some(hit) = cache.borrow().get(&key) {
            return Ok(Rc::clone(hit));
        }
        let d = Rc::new(self.compute(history, alpha, beta)?);
        cache.borrow_mut().insert(key, Rc::clone(&d));
        Ok(d)
    }

    fn compute(&self, history: &[TokenId], alpha: f64, beta: f64) -> Result<StepDistributions> {
        let t = self.spec.temperature;
        let zl = scale(&self.lm_l.next_logits(history), self.spec.t_l);
        let zs = scale(&self.lm_s.next_logits(history), self.spec.t_s);
        let combined = combine_logits(&zl, &zs, alpha, beta)?;
        Ok(StepDistributions {
            alpha,
            beta,
            p: softmax_with_temperature(combined.as_slice(), t)?,
            log_p: log_softmax_with_temperature(combined.as_slice(), t)?,
            log_pl: log_softmax_with_temperature(&zl, t)?,
            log_ps: log_softmax_with_temperature(&zs, t)?,
            row: OnceCell::new(),
        })
    }

    /// Autoregressive decode from `prompt` until EOS (kept as the last
    /// output token) or `max_len` tokens. `seed` replaces the seed stored
    /// in the decoder's [`EnsembleSpec`].
    pub fn sample(&self, prompt: &[TokenId], seed: u64) -> Result<GenerationRecord> {
        self.sample_with(prompt, seed, |_, _| {})
    }

    /// Like [`Decoder::sample`], also handing each step's distributions and
    /// chosen token to `observe`.
    pub fn sample_with<F>(&self, prompt: &[TokenId], seed: u64, mut observe: F) -> Result<GenerationRecord>
    where
        F: FnMut(&StepDistributions, TokenId),
    {
        let v = self.lm_l.vocab_size();
        if let Some(t) = prompt.iter().find(|t| t.index() >= v) {
            return Err(Error::integrity(format!("prompt token {t} out of range")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut history = prompt.to_vec();
        let mut rec = GenerationRecord {
            prompt_ids: prompt.to_vec(),
            output_ids: Vec::new(),
            logp_p: Vec::new(),
            logp_l: Vec::new(),
            logp_s: Vec::new(),
            y_bits: Vec::new(),
            seed,
            spec: EnsembleSpec {
                seed,
                ..self.spec.clone()
            },
        };
        for step in 0..self.spec.max_len {
            let d = self.step(&history, step)?;
            let y = if self.spec.greedy {
                d.p.argmax()
            } else {
                draw(d.p.as_slice(), rng.gen::<f64>())
            };
            let tok = TokenId(y as u32);
            rec.output_ids.push(tok);
            rec.logp_p.push(d.log_p[y]);
            rec.logp_l.push(d.log_pl[y]);
            rec.logp_s.push(d.log_ps[y]);
            rec.y_bits.push((d.log_p[y] - d.log_ps[y]) / std::f64::consts::LN_2);
            observe(&d, tok);
            history.push(tok);
            if tok == TokenId::EOS {
                break;
            }
        }
        Ok(rec)
    }
}

/// Inverse-CDF draw with a uniform `u ∈ [0, 1)`.
pub fn draw(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total mass
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1)
}

/// One decode session under `spec` (seeded by `spec.seed`).
pub fn sample_sequence(
    lm_l: &dyn LanguageModel,
    lm_s: &dyn LanguageModel,
    prompt: &[TokenId],
    spec: &EnsembleSpec,
) -> Result<GenerationRecord> {
    Decoder::new(lm_l, lm_s, spec)?.sample(prompt, spec.seed)
}

/// Tokens and per-step log-probabilities from decoding one model alone.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleGeneration {
    pub output_ids: Vec<TokenId>,
    pub logp: Vec<f64>,
}

/// Decode a single model with member temperature `t_member` and sampling
/// temperature `temperature`, using the same sampling rule and RNG stream
/// as [`Decoder::sample`]. Serves as the reference the ensemble endpoints
/// are checked against.
pub fn sample_single(
    lm: &dyn LanguageModel,
    prompt: &[TokenId],
    t_member: f64,
    temperature: f64,
    greedy: bool,
    max_len: usize,
    seed: u64,
) -> Result<SingleGeneration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = prompt.to_vec();
    let mut out = SingleGeneration {
        output_ids: Vec::new(),
        logp: Vec::new(),
    };
    for _ in 0..max_len {
        let z = scale(&lm.next_logits(&history), t_member);
        let p = softmax_with_temperature(&z, temperature)?;
        let lp = log_softmax_with_temperature(&z, temperature)?;
        let y = if greedy {
            argmax(p.as_slice())
        } else {
            draw(p.as_slice(), rng.gen::<f64>())
        };
        let tok = TokenId(y as u32);
        out.output_ids.push(tok);
        out.logp.push(lp[y]);
        history.push(tok);
        if tok == TokenId::EOS {
            break;
        }
    }
    Ok(out)
}

/// One decode session as stored in `generations.jsonl`. Log-probabilities
/// are natural logs of the chosen token under the ensemble and each
/// tempered member; `y_bits` is `log₂(p(y)/p_s(y))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub prompt_ids: Vec<TokenId>,
    pub output_ids: Vec<TokenId>,
    pub logp_p: Vec<f64>,
    pub logp_l: Vec<f64>,
    pub logp_s: Vec<f64>,
    pub y_bits: Vec<f64>,
    pub seed: u64,
    pub spec: EnsembleSpec,
}

impl GenerationRecord {
    pub fn check(&self) -> Result<()> {
        let n = self.output_ids.len();
        if [
            self.logp_p.len(),
            self.logp_l.len(),
            self.logp_s.len(),
            self.y_bits.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::integrity("generation record per-step arrays disagree in length"));
        }
        if self.y_bits.iter().any(|y| !y.is_finite()) {
            return Err(Error::integrity("generation record has a non-finite Y sample"));
        }
        Ok(())
    }

    /// Output without a trailing EOS.
    pub fn content(&self) -> &[TokenId] {
        match self.output_ids.last() {
            Some(&TokenId::EOS) => &self.output_ids[..self.output_ids.len() - 1],
            _ => &self.output_ids,
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langmodel::{ConstantModel, HashedModel};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn worked_pair() -> (ConstantModel, ConstantModel) {
        (
            ConstantModel::from_probs(&[0.8, 0.2], "v").unwrap(),
            ConstantModel::from_probs(&[0.5, 0.5], "v").unwrap(),
        )
    }

    #[test]
    fn combine_endpoints_are_exact() {
        let zl = [0.3, -1.2, 4.0];
        let zs = [2.0, 0.5, -0.7];
        assert_eq!(combine_logits(&zl, &zs, 1.0, 0.0).unwrap().as_slice(), &zl);
        assert_eq!(combine_logits(&zl, &zs, 0.0, 1.0).unwrap().as_slice(), &zs);
    }

    #[test]
    fn combine_length_mismatch_is_integrity_error() {
        assert!(matches!(
            combine_logits(&[0.0], &[0.0, 1.0], 0.5, 0.5),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn equal_weight_worked_example() {
        // sqrt(0.8*0.5) : sqrt(0.2*0.5) = 2 : 1
        let (l, s) = worked_pair();
        let z = combine_logits(l.next_logits(&[]).as_slice(), s.next_logits(&[]).as_slice(), 0.5, 0.5).unwrap();
        let p = softmax_with_temperature(z.as_slice(), 1.0).unwrap();
        assert!(close(p.as_slice(), &[2.0 / 3.0, 1.0 / 3.0], 1e-12));
        let q = ensemble_next_distribution(&l, &s, &[], &EnsembleSpec::constant(0.5), 0).unwrap();
        assert!(close(q.as_slice(), &[2.0 / 3.0, 1.0 / 3.0], 1e-12));
    }

    #[test]
    fn identical_members_are_a_fixed_point() {
        let m = HashedModel::new(9, 2, 3.0, 1, "v").unwrap();
        let h = [TokenId(3), TokenId(4)];
        let single = softmax_with_temperature(m.next_logits(&h).as_slice(), 1.0).unwrap();
        for a in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let p = ensemble_next_distribution(&m, &m, &h, &EnsembleSpec::constant(a), 0).unwrap();
            assert!(close(p.as_slice(), single.as_slice(), 1e-12));
        }
    }

    #[test]
    fn vocabulary_mismatch_is_config_error() {
        let a = ConstantModel::new(vec![0.0; 3], "x").unwrap();
        let b = ConstantModel::new(vec![0.0; 3], "y").unwrap();
        let c = ConstantModel::new(vec![0.0; 4], "x").unwrap();
        let spec = EnsembleSpec::default();
        assert!(matches!(
            ensemble_next_distribution(&a, &b, &[], &spec, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ensemble_next_distribution(&a, &c, &[], &spec, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let mut s = EnsembleSpec::constant(1.5);
        assert!(s.validate().is_err());
        s = EnsembleSpec::constant(0.5);
        s.temperature = 0.0;
        assert!(s.validate().is_err());
        s = EnsembleSpec::constant(0.0);
        s.beta = Some(0.0);
        assert!(s.validate().is_err());
        s.beta = Some(0.3);
        assert!(s.validate().is_ok());
        assert_eq!(s.weights(5), (0.0, 0.3));
    }

    #[test]
    fn head_then_schedule() {
        let s = AlphaSchedule::head_then(2, 1.0, 0.0);
        assert_eq!(
            (0..4).map(|t| s.alpha_at(t)).collect::<Vec<_>>(),
            vec![1.0, 1.0, 0.0, 0.0]
        );
        assert!(!s.is_constant());
        assert!(AlphaSchedule::constant(0.4).is_constant());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let l = HashedModel::new(12, 2, 4.0, 1, "v").unwrap();
        let s = HashedModel::new(12, 1, 4.0, 2, "v").unwrap();
        let spec = EnsembleSpec {
            seed: 99,
            max_len: 20,
            ..EnsembleSpec::constant(0.6)
        };
        let a = sample_sequence(&l, &s, &[TokenId(3)], &spec).unwrap();
        let b = sample_sequence(&l, &s, &[TokenId(3)], &spec).unwrap();
        assert_eq!(a.to_json_line().unwrap(), b.to_json_line().unwrap());
        a.check().unwrap();
        let memo = Decoder::new(&l, &s, &spec).unwrap().memoized();
        let c = memo.sample(&[TokenId(3)], 99).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn greedy_ignores_seed() {
        let l = HashedModel::new(12, 2, 4.0, 1, "v").unwrap();
        let s = HashedModel::new(12, 1, 4.0, 2, "v").unwrap();
        let spec = EnsembleSpec {
            greedy: true,
            max_len: 10,
            ..EnsembleSpec::constant(0.3)
        };
        let d = Decoder::new(&l, &s, &spec).unwrap();
        assert_eq!(
            d.sample(&[TokenId(2)], 1).unwrap().output_ids,
            d.sample(&[TokenId(2)], 2).unwrap().output_ids
        );
    }

    #[test]
    fn y_bits_match_log_ratio() {
        let (l, s) = worked_pair();
        let spec = EnsembleSpec {
            max_len: 5,
            ..EnsembleSpec::constant(0.5)
        };
        let r = sample_sequence(&l, &s, &[], &spec).unwrap();
        for i in 0..r.output_ids.len() {
            let expected = (r.logp_p[i] - r.logp_s[i]) / std::f64::consts::LN_2;
            assert!((r.y_bits[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn draw_handles_rounding_tail() {
        assert_eq!(draw(&[0.5, 0.5], 0.0), 0);
        assert_eq!(draw(&[0.5, 0.5], 0.75), 1);
        assert_eq!(draw(&[0.3, 0.3, 0.0], 0.9999999), 1);
    }
}
