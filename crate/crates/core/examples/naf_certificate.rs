//! Per-step and whole-sequence divergence certificates for an equal-weight
//! ensemble, checked against exact enumeration.
//!
//! `cargo run --example naf_certificate`

use logit_purify::certificate::{
    bhattacharyya_partition, certify_generation, enumerate_sequences, naf_step_bound, verify_event_bound,
    DEFAULT_ENUMERATION_CAP,
};
use logit_purify::ensemble::{sample_sequence, EnsembleSpec};
use logit_purify::langmodel::{HashedModel, ProbVector};
use logit_purify::tokenization::TokenId;

fn main() -> logit_purify::Result<()> {
    let p_l = ProbVector::new(vec![0.8, 0.2])?;
    let p_s = ProbVector::new(vec![0.5, 0.5])?;
    let part = bhattacharyya_partition(&p_l, &p_s)?;
    println!(
        "two-symbol pair: Z = {:.5}, k = {:.4} bits",
        part.z,
        naf_step_bound(&p_l, &p_s)?
    );

    let lm_l = HashedModel::new(3, 2, 4.0, 11, "v")?;
    let lm_s = HashedModel::new(3, 2, 1.0, 12, "v")?;
    let prompt = [TokenId(1)];
    let spec = EnsembleSpec {
        max_len: 2,
        ..EnsembleSpec::constant(0.5)
    };

    // the exact divergence of the two-step sequence distribution
    let out = enumerate_sequences(&lm_l, &lm_s, &prompt, &spec, 2, DEFAULT_ENUMERATION_CAP)?;
    println!(
        "{} sequences: KL(p||p_s) = {:.4} bits, KL(p||p_l) = {:.4} bits",
        out.sequences.len(),
        out.stepwise_kl_ps_bits,
        out.stepwise_kl_pl_bits
    );
    for eps in [0.0, 0.5, 1.0] {
        let r = verify_event_bound(&out.log_p, &out.log_ps, eps, 0)?;
        println!(
            "eps {eps}: delta {:.4}, every one of {} events bounded: {}",
            r.delta,
            r.events_checked,
            r.holds(1e-12)
        );
    }

    // a sampled generation over a larger vocabulary and its ledger; the
    // k-bound column dominates both KL columns
    let big_l = HashedModel::new(40, 3, 4.0, 11, "w")?;
    let big_s = HashedModel::new(40, 3, 1.0, 12, "w")?;
    let spec = EnsembleSpec {
        max_len: 8,
        seed: 3,
        ..spec
    };
    let rec = sample_sequence(&big_l, &big_s, &prompt, &spec)?;
    let ledger = certify_generation(&rec, &big_l, &big_s, &[0.5, 1.0])?;
    for r in &ledger.rows {
        println!(
            "step {}: k {:.4}  KL(p||p_l) {:.4}  KL(p||p_s) {:.4}",
            r.step, r.row.k_bound_bits, r.row.kl_pl_bits, r.row.kl_ps_bits
        );
    }
    print!("{}", ledger.to_jsonl()?.lines().last().unwrap_or_default());
    println!();
    Ok(())
}
