mod common;

use std::f64::consts::LN_2;

use common::criteria;
use common::*;
use logit_purify::certificate::{
    bhattacharyya_partition, certify_generation, enumerate_sequences, estimate_concentration, kl_divergence_bits,
    naf_step_bound, step_row, DEFAULT_ENUMERATION_CAP,
};
use logit_purify::ensemble::{ensemble_next_distribution, sample_sequence, AlphaSchedule, Decoder, EnsembleSpec};
use logit_purify::langmodel::{ConstantModel, HashedModel, LanguageModel};
use logit_purify::tokenization::TokenId;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn geometric_mean_identity_on_random_pairs() {
    let c = criteria::geometric_mean_identity(1000);
    assert!(c.passed, "{}", c.detail);
}

#[test]
fn kl_identity_chain_on_random_pairs() {
    let c = criteria::identity_chain(1000);
    assert!(c.passed, "{}", c.detail);
}

#[test]
fn worked_two_symbol_fixture() {
    let c = criteria::worked_fixture();
    assert!(c.passed, "{}", c.detail);
    let p = pv(&[0.8, 0.2]);
    let q = pv(&[0.5, 0.5]);
    let part = bhattacharyya_partition(&p, &q).unwrap();
    assert!((part.z - (0.4f64.sqrt() + 0.1f64.sqrt())).abs() < 1e-15);
    assert!((naf_step_bound(&p, &q).unwrap() - 0.152).abs() < 1e-3);
}

#[test]
fn event_bound_holds_on_every_event() {
    let c = criteria::event_bound_exhaustive(24);
    assert!(c.passed, "{}", c.detail);
}

#[test]
fn chain_rule_matches_enumeration() {
    for seed in 0..10 {
        let lm_l = HashedModel::new(3, 2, 2.0, 100 + seed, "v").unwrap();
        let lm_s = HashedModel::new(3, 2, 2.0, 200 + seed, "v").unwrap();
        let spec = EnsembleSpec::constant(0.4);
        let out = enumerate_sequences(&lm_l, &lm_s, &[TokenId(0)], &spec, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(out.sequences.len(), 9);
        let mass: f64 = out.log_p.iter().map(|v| v.exp()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        let joint_ps: f64 = out
            .log_p
            .iter()
            .zip(&out.log_ps)
            .map(|(a, b)| a.exp() * (a - b) / LN_2)
            .sum();
        let joint_pl: f64 = out
            .log_p
            .iter()
            .zip(&out.log_pl)
            .map(|(a, b)| a.exp() * (a - b) / LN_2)
            .sum();
        assert!((joint_ps - out.stepwise_kl_ps_bits).abs() < 1e-9);
        assert!((joint_pl - out.stepwise_kl_pl_bits).abs() < 1e-9);
    }
}

#[test]
fn enumeration_over_cap_is_rejected() {
    let lm = HashedModel::new(5, 1, 1.0, 1, "v").unwrap();
    assert!(enumerate_sequences(&lm, &lm, &[], &EnsembleSpec::constant(0.5), 6, 4096).is_err());
}

#[test]
fn first_token_frequencies_within_three_sigma() {
    let lm_l = ConstantModel::from_probs(&[0.7, 0.3], "v").unwrap();
    let lm_s = ConstantModel::from_probs(&[0.2, 0.8], "v").unwrap();
    let spec = EnsembleSpec {
        max_len: 1,
        ..EnsembleSpec::constant(0.6)
    };
    let exact = ensemble_next_distribution(&lm_l, &lm_s, &[], &spec, 0)
        .unwrap()
        .as_slice()[1];
    let decoder = Decoder::new(&lm_l, &lm_s, &spec).unwrap();
    let n = 10_000;
    let hits = (0..n)
        .filter(|&s| decoder.sample(&[], s).unwrap().output_ids[0] == TokenId(1))
        .count() as f64;
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!(
        (hits / n as f64 - exact).abs() <= 3.0 * sigma,
        "{} vs {exact}",
        hits / n as f64
    );
}

#[test]
fn identical_members_certify_zero() {
    let lm = HashedModel::new(6, 2, 2.0, 3, "v").unwrap();
    for alpha in [0.0, 0.5, 1.0] {
        let spec = EnsembleSpec {
            seed: 5,
            ..EnsembleSpec::constant(alpha)
        };
        let rec = sample_sequence(&lm, &lm, &[TokenId(2)], &spec).unwrap();
        let ledger = certify_generation(&rec, &lm, &lm, &[0.1, 0.5]).unwrap();
        for r in &ledger.rows {
            assert!(r.row.k_bound_bits.abs() < 1e-12);
            assert!((r.row.z - 1.0).abs() < 1e-12);
        }
        assert!(ledger.summary.cum_k_bound.abs() < 1e-12);
        assert!(ledger.summary.eps_delta_table.iter().all(|e| e.delta == 0.0));
    }
}

#[test]
fn pure_benign_schedule_has_zero_divergence_to_benign() {
    let lm_l = HashedModel::new(6, 2, 2.0, 3, "v").unwrap();
    let lm_s = HashedModel::new(6, 2, 2.0, 4, "v").unwrap();
    let spec = EnsembleSpec {
        seed: 9,
        ..EnsembleSpec::constant(0.0)
    };
    let rec = sample_sequence(&lm_l, &lm_s, &[TokenId(1)], &spec).unwrap();
    let ledger = certify_generation(&rec, &lm_l, &lm_s, &[0.5]).unwrap();
    assert!(ledger.rows.iter().all(|r| r.row.kl_ps_bits.abs() < 1e-12));
    assert!(ledger.summary.cum_kl_ps_bits.abs() < 1e-12);

    // benign model as both members gives the same certificate rows for
    // the pure-benign ensemble's divergence to the benign model
    let both = certify_generation(
        &sample_sequence(&lm_s, &lm_s, &[TokenId(1)], &spec).unwrap(),
        &lm_s,
        &lm_s,
        &[0.5],
    )
    .unwrap();
    let same = sample_sequence(&lm_s, &lm_s, &[TokenId(1)], &spec).unwrap();
    assert_eq!(same.output_ids, rec.output_ids);
    for (a, b) in both.rows.iter().zip(&ledger.rows) {
        assert_eq!(a.row.kl_ps_bits, b.row.kl_ps_bits);
    }
}

#[test]
fn argmax_follows_the_endpoint_member() {
    let lm_l = HashedModel::new(7, 2, 3.0, 21, "v").unwrap();
    let lm_s = HashedModel::new(7, 2, 3.0, 22, "v").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let h = random_seq(&mut rng, 7, 5);
        for (alpha, lm) in [(1.0, &lm_l), (0.0, &lm_s)] {
            let p = ensemble_next_distribution(&lm_l, &lm_s, &h, &EnsembleSpec::constant(alpha), 0).unwrap();
            let z = lm.next_logits(&h);
            let best = (0..7)
                .max_by(|&a, &b| z.as_slice()[a].total_cmp(&z.as_slice()[b]))
                .unwrap();
            assert_eq!(p.argmax(), best);
        }
    }
}

#[test]
fn identical_seeds_give_identical_records() {
    let lm_l = HashedModel::new(9, 3, 2.0, 1, "v").unwrap();
    let lm_s = HashedModel::new(9, 3, 2.0, 2, "v").unwrap();
    let spec = EnsembleSpec {
        schedule: AlphaSchedule::head_then(2, 1.0, 0.3),
        seed: 77,
        ..EnsembleSpec::default()
    };
    let a = sample_sequence(&lm_l, &lm_s, &[TokenId(3)], &spec).unwrap();
    let b = sample_sequence(&lm_l, &lm_s, &[TokenId(3)], &spec).unwrap();
    assert_eq!(a.to_json_line().unwrap(), b.to_json_line().unwrap());
    let memo = Decoder::new(&lm_l, &lm_s, &spec).unwrap().memoized();
    assert_eq!(memo.sample(&[TokenId(3)], 77).unwrap(), a);
}

#[test]
fn tampered_record_fails_replay() {
    let lm_l = HashedModel::new(5, 2, 2.0, 1, "v").unwrap();
    let lm_s = HashedModel::new(5, 2, 2.0, 2, "v").unwrap();
    let spec = EnsembleSpec {
        seed: 4,
        max_len: 6,
        ..EnsembleSpec::constant(0.5)
    };
    let mut rec = sample_sequence(&lm_l, &lm_s, &[TokenId(2)], &spec).unwrap();
    rec.logp_p[0] += 1e-6;
    let err = certify_generation(&rec, &lm_l, &lm_s, &[0.5]).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n).prop_map(|v| {
        let e: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #[test]
    fn endpoints_reproduce_members(pl in probs(8), ps in probs(8)) {
        let lm_l = ConstantModel::from_probs(&pl, "v").unwrap();
        let lm_s = ConstantModel::from_probs(&ps, "v").unwrap();
        let one = ensemble_next_distribution(&lm_l, &lm_s, &[], &EnsembleSpec::constant(1.0), 0).unwrap();
        let zero = ensemble_next_distribution(&lm_l, &lm_s, &[], &EnsembleSpec::constant(0.0), 0).unwrap();
        for i in 0..8 {
            prop_assert!((one.as_slice()[i] - pl[i]).abs() < 1e-12);
            prop_assert!((zero.as_slice()[i] - ps[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn logit_shifts_do_not_change_the_ensemble(
        zl in prop::collection::vec(-6.0f64..6.0, 6),
        zs in prop::collection::vec(-6.0f64..6.0, 6),
        cl in -50.0f64..50.0,
        cs in -50.0f64..50.0,
        alpha in 0.0f64..=1.0,
        t in 0.2f64..3.0,
    ) {
        let spec = EnsembleSpec { temperature: t, ..EnsembleSpec::constant(alpha) };
        let base = ensemble_next_distribution(
            &ConstantModel::new(zl.clone(), "v").unwrap(),
            &ConstantModel::new(zs.clone(), "v").unwrap(),
            &[], &spec, 0).unwrap();
        let shifted = ensemble_next_distribution(
            &ConstantModel::new(zl.iter().map(|x| x + cl).collect(), "v").unwrap(),
            &ConstantModel::new(zs.iter().map(|x| x + cs).collect(), "v").unwrap(),
            &[], &spec, 0).unwrap();
        for (a, b) in base.as_slice().iter().zip(shifted.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_properties(pl in probs(10), ps in probs(10)) {
        let part = bhattacharyya_partition(&pv(&pl), &pv(&ps)).unwrap();
        prop_assert!(part.z > 0.0 && part.z <= 1.0);
        prop_assert!((part.h2 - (1.0 - part.z)).abs() <= 1e-12);
        let same = bhattacharyya_partition(&pv(&pl), &pv(&pl)).unwrap();
        prop_assert!((same.z - 1.0).abs() <= 1e-12);
        let ln = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
        let row = step_row(&ln(&pl), &ln(&pl), &ln(&ps));
        prop_assert!(row.kl_pl_bits >= 0.0 && row.kl_ps_bits >= 0.0);
        prop_assert!((row.kl_ps_bits - kl_divergence_bits(&pv(&pl), &pv(&ps)).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn delta_non_increasing_in_eps(samples in prop::collection::vec(-10.0f64..10.0, 1..60)) {
        let grid = [0.0, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 5.0];
        let c = estimate_concentration(&samples, &grid).unwrap();
        for w in c.table.windows(2) {
            prop_assert!(w[1].delta <= w[0].delta);
        }
    }
}
