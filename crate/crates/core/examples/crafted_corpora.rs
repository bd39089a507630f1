//! The three crafted corpora, validated and printed.
//!
//! `cargo run --example crafted_corpora [count]`

use logit_purify::crafting::{
    craft_copyright_corpus, craft_pii_corpus, craft_poison_corpus, token_len, validate_items,
};

fn main() -> logit_purify::Result<()> {
    let count = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    for items in [
        craft_poison_corpus(7, count)?,
        craft_copyright_corpus(7, count)?,
        craft_pii_corpus(7, count.max(6))?,
    ] {
        validate_items(&items)?;
        println!("== {:?} ({} items)", items[0].kind, items.len());
        for it in items.iter().take(count.max(6)) {
            println!("  prompt:    {}", it.prompt);
            println!("  reference: {} ({} tokens)", it.reference, token_len(&it.reference));
            if !it.secret_tags.is_empty() {
                println!("  secrets:   {:?}", it.secret_tags);
            }
        }
    }
    Ok(())
}
