//! Mixing two next-token distributions at the logit level.
//!
//! `cargo run --example ensemble_basics`

use logit_purify::ensemble::{ensemble_next_distribution, sample_sequence, EnsembleSpec};
use logit_purify::langmodel::{ConstantModel, HashedModel};
use logit_purify::tokenization::TokenId;

fn main() -> logit_purify::Result<()> {
    // an "untrusted" member sure of token 0, a benign member that is not
    let lm_l = ConstantModel::from_probs(&[0.90, 0.05, 0.05], "toy")?;
    let lm_s = ConstantModel::from_probs(&[0.20, 0.40, 0.40], "toy")?;
    println!("alpha   p(0)    p(1)    p(2)");
    for alpha in [1.0, 0.75, 0.5, 0.25, 0.0] {
        let p = ensemble_next_distribution(&lm_l, &lm_s, &[], &EnsembleSpec::constant(alpha), 0)?;
        let p = p.as_slice();
        println!("{alpha:<7} {:.4}  {:.4}  {:.4}", p[0], p[1], p[2]);
    }

    // sampling temperature sharpens or flattens the mixture
    for temperature in [0.2, 1.0, 5.0] {
        let spec = EnsembleSpec {
            temperature,
            ..EnsembleSpec::constant(0.5)
        };
        let p = ensemble_next_distribution(&lm_l, &lm_s, &[], &spec, 0)?;
        println!("T={temperature}: p(0) = {:.4}", p.as_slice()[0]);
    }

    // context-dependent members and a seeded decode
    let a = HashedModel::new(12, 2, 3.0, 1, "h")?;
    let b = HashedModel::new(12, 2, 3.0, 2, "h")?;
    let spec = EnsembleSpec {
        max_len: 10,
        seed: 42,
        ..EnsembleSpec::constant(0.5)
    };
    let rec = sample_sequence(&a, &b, &[TokenId(3), TokenId(4)], &spec)?;
    let ids: Vec<u32> = rec.output_ids.iter().map(|t| t.0).collect();
    println!("decoded {ids:?}");
    println!("log2 p/p_s per step {:.3?}", rec.y_bits);
    Ok(())
}
