//! The numeric acceptance checks, shared by the integration tests (which
//! assert them) and the acceptance target (which reports them).

use std::f64::consts::LN_2;

use logit_purify::certificate::{enumerate_sequences, step_row, verify_event_bound, DEFAULT_ENUMERATION_CAP};
use logit_purify::ensemble::{ensemble_next_distribution, EnsembleSpec};
use logit_purify::langmodel::{anchored_loss, ConstantModel, HashedModel, NeuralShape, TinyNeuralLM, TrainingExample};
use logit_purify::metrics::{em_overlap, ic_metric, kgram_match_count, leak_count, pass_at_k, winnow_similarity};
use logit_purify::tokenization::TokenId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Pass/fail with a one-line description of what was measured.
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(passed: bool, detail: String) -> Self {
        Check { passed, detail }
    }
}

/// softmax(α ln p_l + β ln p_s) against p_l^α p_s^β / Σ on random pairs.
pub fn geometric_mean_identity(pairs: u64) -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=64);
        let pl = random_probs(&mut rng, n);
        let ps = random_probs(&mut rng, n);
        let alpha: f64 = rng.gen_range(0.0..=1.0);
        let beta = 1.0 - alpha;
        let lm_l = ConstantModel::from_probs(&pl, "v").unwrap();
        let lm_s = ConstantModel::from_probs(&ps, "v").unwrap();
        let p = ensemble_next_distribution(&lm_l, &lm_s, &[], &EnsembleSpec::constant(alpha), 0).unwrap();
        let w: Vec<f64> = pl.iter().zip(&ps).map(|(a, b)| a.powf(alpha) * b.powf(beta)).collect();
        let s: f64 = w.iter().sum();
        for (x, y) in p.as_slice().iter().zip(&w) {
            worst = worst.max((x - y / s).abs());
        }
    }
    Check::new(
        worst <= 1e-9,
        format!("{pairs} pairs, max elementwise error {worst:.3e} (tol 1e-9)"),
    )
}

/// KL(p‖p_l) + KL(p‖p_s) = 2 log₂(1/Z) for the equal-weight ensemble, and
/// max-KL ≤ k_bound, with every quantity recomputed naively.
pub fn identity_chain(pairs: u64) -> Check {
    let mut worst: f64 = 0.0;
    let mut bound_ok = true;
    for seed in 0..pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000_000 + seed);
        let n = rng.gen_range(2..=64);
        let pl = random_probs(&mut rng, n);
        let ps = random_probs(&mut rng, n);
        let z: f64 = pl.iter().zip(&ps).map(|(a, b)| (a * b).sqrt()).sum();
        let p: Vec<f64> = pl.iter().zip(&ps).map(|(a, b)| (a * b).sqrt() / z).collect();
        let lhs = kl_bits_naive(&p, &pl) + kl_bits_naive(&p, &ps);
        let rhs = 2.0 * (1.0 / z).log2();
        worst = worst.max((lhs - rhs).abs());

        let ln = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
        let row = step_row(&ln(&p), &ln(&pl), &ln(&ps));
        worst = worst.max((row.kl_pl_bits + row.kl_ps_bits - row.k_bound_bits).abs());
        worst = worst.max((row.k_bound_bits - rhs).abs());
        bound_ok &= row.max_kl_bits() <= row.k_bound_bits + 1e-9;
    }
    let fixture = worked_fixture();
    Check::new(
        worst <= 1e-9 && bound_ok && fixture.passed,
        format!(
            "{pairs} pairs, max identity error {worst:.3e} (tol 1e-9), max-KL <= k_bound: {bound_ok}; {}",
            fixture.detail
        ),
    )
}

/// p_l = (0.8, 0.2), p_s = (0.5, 0.5): p = (2/3, 1/3), Z ≈ 0.94868,
/// k ≈ 0.1520 bits.
pub fn worked_fixture() -> Check {
    let lm_l = ConstantModel::from_probs(&[0.8, 0.2], "v").unwrap();
    let lm_s = ConstantModel::from_probs(&[0.5, 0.5], "v").unwrap();
    let p = ensemble_next_distribution(&lm_l, &lm_s, &[], &EnsembleSpec::constant(0.5), 0).unwrap();
    let lp: Vec<f64> = p.as_slice().iter().map(|x| x.ln()).collect();
    let row = step_row(&lp, &[0.8f64.ln(), 0.2f64.ln()], &[0.5f64.ln(), 0.5f64.ln()]);
    let ok = (p.as_slice()[0] - 2.0 / 3.0).abs() < 1e-12
        && (row.z - 0.94868).abs() < 5e-6
        && (row.k_bound_bits - 0.1520).abs() < 5e-5;
    Check::new(
        ok,
        format!(
            "fixture p = {:.5}, Z = {:.5}, k = {:.4} bits",
            p.as_slice()[0],
            row.z,
            row.k_bound_bits
        ),
    )
}

/// Every one of the 2^9 events over |V| = 3, L = 2 outcomes, with δ
/// computed exactly by an independent closed-interval scan.
pub fn event_bound_exhaustive(instances: u64) -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut events = 0u64;
    let mut agree = true;
    for seed in 0..instances {
        let lm_l = HashedModel::new(3, 2, 2.5, 2 * seed + 1, "v").unwrap();
        let lm_s = HashedModel::new(3, 2, 2.5, 2 * seed + 2, "v").unwrap();
        let alpha = [0.5, 0.3, 0.8, 1.0][seed as usize % 4];
        let spec = EnsembleSpec::constant(alpha);
        let out = enumerate_sequences(&lm_l, &lm_s, &[TokenId(2)], &spec, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let p: Vec<f64> = out.log_p.iter().map(|v| v.exp()).collect();
        let ps: Vec<f64> = out.log_ps.iter().map(|v| v.exp()).collect();
        let y: Vec<f64> = out.log_p.iter().zip(&out.log_ps).map(|(a, b)| (a - b) / LN_2).collect();
        let k: f64 = p.iter().zip(&y).map(|(a, b)| a * b).sum();
        for eps in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let (lo, hi) = ((1.0 - eps) * k, (1.0 + eps) * k);
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let delta: f64 = p
                .iter()
                .zip(&y)
                .filter(|(_, &yi)| yi < lo || yi > hi)
                .map(|(a, _)| a)
                .sum();
            let factor = ((1.0 + eps) * k).exp2();
            for mask in 0u32..(1 << p.len()) {
                let (mut pe, mut pse) = (0.0, 0.0);
                for i in (0..p.len()).filter(|i| mask >> i & 1 == 1) {
                    pe += p[i];
                    pse += ps[i];
                }
                worst = worst.max(pe - factor * pse - delta);
                events += 1;
            }
            let r = verify_event_bound(&out.log_p, &out.log_ps, eps, seed).unwrap();
            agree &= r.exhaustive && r.events_checked == 512 && r.holds(1e-12) && (r.delta - delta).abs() < 1e-12;
        }
    }
    Check::new(
        worst <= 1e-12 && agree,
        format!("{instances} instances x 5 eps, {events} events, max violation {worst:.3e} (tol 1e-12), library report agrees: {agree}"),
    )
}

fn fd_instance(seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = NeuralShape {
        vocab_size: rng.gen_range(3..10),
        window: rng.gen_range(1..4),
        dim: rng.gen_range(1..5),
    };
    let mut m = TinyNeuralLM::random(shape, rng.gen_range(0.1..1.0), seed, "v").unwrap();
    let anchor: Vec<f64> = m.params().iter().map(|p| p + rng.gen_range(-0.2..0.2)).collect();
    m.set_anchor(anchor.clone()).unwrap();
    let lambda = [0.0, 0.01, 0.1, 1.0][rng.gen_range(0..4)];
    let batch: Vec<TrainingExample> = (0..rng.gen_range(1..6))
        .map(|_| {
            let len = rng.gen_range(0..=shape.window);
            TrainingExample {
                context: (0..len)
                    .map(|_| TokenId(rng.gen_range(0..shape.vocab_size as u32)))
                    .collect(),
                target: TokenId(rng.gen_range(0..shape.vocab_size as u32)),
            }
        })
        .collect();
    let (_, grad) = anchored_loss(&m, &batch, lambda).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..m.params().len() {
        if (m.params()[i] - anchor[i]).abs() <= 1e-3 {
            continue;
        }
        let mut plus = m.clone();
        plus.params_mut()[i] += h;
        let mut minus = m.clone();
        minus.params_mut()[i] -= h;
        let fp = anchored_loss(&plus, &batch, lambda).unwrap().0.total;
        let fm = anchored_loss(&minus, &batch, lambda).unwrap().0.total;
        let numeric = (fp - fm) / (2.0 * h);
        let denom = grad[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((grad[i] - numeric).abs() / denom);
        checked += 1;
    }
    (worst, checked)
}

/// Analytic anchored-loss gradient against central differences.
pub fn gradient_check(triples: u64) -> Check {
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for seed in 0..triples {
        let (w, c) = fd_instance(seed);
        worst = worst.max(w);
        coords += c;
    }
    Check::new(
        worst <= 1e-4,
        format!("{triples} triples, {coords} smooth coordinates, max relative error {worst:.3e} (tol 1e-4)"),
    )
}

/// Every metric against its brute-force oracle.
pub fn metric_oracles(instances: u64) -> Check {
    let mut failures = Vec::new();
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_seq(&mut rng, 3, 20);
        let b = random_seq(&mut rng, 3, 16);
        let k = rng.gen_range(1..6);
        let w = rng.gen_range(1..5);
        if kgram_match_count(&a, &b, k).unwrap() != kgram_oracle(&a, &b, k) {
            failures.push(format!("kgram seed {seed}"));
        }
        if em_overlap(&a, &b) != em_oracle(&a, &b) {
            failures.push(format!("em seed {seed}"));
        }
        if (winnow_similarity(&a, &b, k, w).unwrap() - winnow_similarity_oracle(&a, &b, k, w)).abs() > 1e-12 {
            failures.push(format!("winnow seed {seed}"));
        }
        let gens = vec![vec![a.clone(), random_seq(&mut rng, 3, 12)], vec![b.clone()]];
        let refs = vec![random_seq(&mut rng, 3, 10), random_seq(&mut rng, 3, 10)];
        let ic_naive = (kgram_oracle(&gens[0][0], &refs[0], k)
            + kgram_oracle(&gens[0][1], &refs[0], k)
            + kgram_oracle(&gens[1][0], &refs[1], k)) as f64
            / 3.0;
        if (ic_metric(&gens, &refs, k).unwrap() - ic_naive).abs() > 1e-12 {
            failures.push(format!("ic seed {seed}"));
        }
        let secrets: Vec<Vec<Vec<TokenId>>> = refs
            .iter()
            .map(|r| r.chunks(3).map(<[TokenId]>::to_vec).collect())
            .collect();
        let lc_naive = (leaked_oracle(&gens[0], &secrets[0]) + leaked_oracle(&gens[1], &secrets[1])) as f64 / 2.0;
        if (leak_count(&gens, &secrets).unwrap() - lc_naive).abs() > 1e-12 {
            failures.push(format!("lc seed {seed}"));
        }
        let n = rng.gen_range(1..=12u64);
        let c = rng.gen_range(0..=n);
        let kk = rng.gen_range(1..=n);
        if (pass_at_k(n, c, kk).unwrap() - pass_at_k_oracle(n, c, kk)).abs() > 1e-12 {
            failures.push(format!("pass@k seed {seed}"));
        }
    }
    let spot = pass_at_k(5, 2, 3).unwrap();
    let spot_ok = (spot - 0.9).abs() <= 1e-12;
    Check::new(
        failures.is_empty() && spot_ok,
        format!(
            "{instances} instances x 6 metrics, {} mismatches{}; pass_at_k(5,2,3) = {spot}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}
