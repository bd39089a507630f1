//! Vocabulary building, encoding, and the benign n-gram model.
//!
//! `cargo run --example tokenize_and_ngram`

use logit_purify::crafting::clean_corpus;
use logit_purify::langmodel::{perplexity, train_ngram};
use logit_purify::tokenization::build_vocabulary;

fn main() -> logit_purify::Result<()> {
    let docs = clean_corpus(3, 20_000);
    let (train, held) = docs.split_at(docs.len() * 9 / 10);
    let vocab = build_vocabulary(train, 512)?;
    println!(
        "{} documents, vocabulary {} (digest {})",
        docs.len(),
        vocab.len(),
        &vocab.digest()[..12]
    );

    let text = "the old lantern glows near the harbor zzyzx .";
    let ids = vocab.encode(text);
    println!(
        "{text}\n  -> {:?}\n  -> {}",
        ids.iter().map(|t| t.0).collect::<Vec<_>>(),
        vocab.decode(&ids)?
    );

    let enc = |d: &[String]| d.iter().map(|s| vocab.encode(s)).collect::<Vec<_>>();
    let (train, held) = (enc(train), enc(held));
    for order in 1..=4 {
        for add_k in [1.0, 0.01] {
            let m = train_ngram(&train, &vocab, order, add_k)?;
            println!(
                "order {order} add-k {add_k}: held-out perplexity {:.2}",
                perplexity(&m, &held)?
            );
        }
    }
    Ok(())
}
