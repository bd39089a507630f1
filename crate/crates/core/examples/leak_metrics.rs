//! The leak metrics on hand-made generations.
//!
//! `cargo run --example leak_metrics`

use logit_purify::metrics::{em_overlap, ic_metric, kgram_match_count, leak_count, pass_at_k, winnow_similarity};
use logit_purify::tokenization::{build_vocabulary, TokenId};

fn main() -> logit_purify::Result<()> {
    let reference = "x = np . fold ( data , key ) ; return x ;";
    let gens = [
        "x = np . fold ( data , key ) ; return x ;",
        "y = np . fold ( data , key ) ; return y ;",
        "the quiet river runs past the mill .",
    ];
    let vocab = build_vocabulary(&[reference, gens[1], gens[2]], 100)?;
    let r = vocab.encode(reference);
    let g: Vec<Vec<TokenId>> = gens.iter().map(|s| vocab.encode(s)).collect();
    for (text, tokens) in gens.iter().zip(&g) {
        println!("{text}");
        println!(
            "  4-grams {}  8-grams {}  longest run {}  winnow {:.2}",
            kgram_match_count(tokens, &r, 4)?,
            kgram_match_count(tokens, &r, 8)?,
            em_overlap(tokens, &r),
            winnow_similarity(tokens, &r, 4, 3)?
        );
    }
    let refs = vec![r];
    println!(
        "IC_4 over the three generations: {:.3}",
        ic_metric(std::slice::from_ref(&g), &refs, 4)?
    );

    let secret = vocab.encode("key ) ;");
    println!("distinct secrets leaked: {}", leak_count(&[g], &[vec![secret]])?);
    println!("pass@3 with 2 of 5 correct: {}", pass_at_k(5, 2, 3)?);
    Ok(())
}
