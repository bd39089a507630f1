//! Fine-tuning a tiny model toward new continuations while an L1 anchor
//! pulls it back to its starting point.
//!
//! `cargo run --release --example anchored_finetune`

use logit_purify::crafting::clean_corpus;
use logit_purify::langmodel::{
    finetune_anchored, perplexity, NeuralShape, TinyNeuralLM, TrainingConfig, TrainingExample,
};
use logit_purify::tokenization::build_vocabulary;

fn main() -> logit_purify::Result<()> {
    let docs = clean_corpus(1, 8000);
    let (train, held) = docs.split_at(docs.len() * 9 / 10);
    let vocab = build_vocabulary(train, 400)?;
    let enc = |d: &[String]| d.iter().map(|s| vocab.encode(s)).collect::<Vec<_>>();
    let (train, held) = (enc(train), enc(held));

    let shape = NeuralShape {
        vocab_size: vocab.len(),
        window: 3,
        dim: 16,
    };
    let mut init = TinyNeuralLM::random(shape, 0.1, 7, vocab.digest())?;
    init.snapshot_anchor();
    let cfg = TrainingConfig {
        lambda: 0.0,
        learning_rate: 1.0,
        steps: 800,
        batch_size: 32,
        seed: 1,
    };
    let data = TrainingExample::from_documents(&train, 3);
    let (mut base, _) = finetune_anchored(&init, &data, &cfg)?;
    base.clear_anchor();
    println!("pretrained: held-out perplexity {:.2}", perplexity(&base, &held)?);

    // fine-tune on a narrow slice; larger lambda keeps the weights closer
    let slice = TrainingExample::from_documents(&train[..20], 3);
    for lambda in [0.0, 1e-4, 1e-3, 1e-2] {
        let mut start = base.clone();
        start.snapshot_anchor();
        let (m, log) = finetune_anchored(
            &start,
            &slice,
            &TrainingConfig {
                lambda,
                steps: 400,
                ..cfg
            },
        )?;
        let last = log.last().expect("at least one step");
        println!(
            "lambda {lambda:<6}: slice ce {:.3}, L1 to anchor {:.2}, held-out perplexity {:.2}",
            last.ce_loss,
            m.l1_to_anchor().unwrap_or(0.0),
            perplexity(&m, &held)?
        );
    }
    Ok(())
}
