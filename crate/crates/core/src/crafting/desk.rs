//! A small template grammar producing the clean (curated) corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lexicon::{ADJECTIVES, ADVERBS, CONNECTIVES, NAMES, NOUNS, PLACES, PREPOSITIONS, VERBS};
use crate::tokenization::split_tokens;

/// Each noun prefers a handful of verbs, and each verb a handful of
/// objects, so the corpus has learnable structure beyond unigram
/// frequencies.
fn verb_for(rng: &mut ChaCha8Rng, noun: usize) -> &'static str {
    VERBS[(noun * 7 + rng.gen_range(0..6)) % VERBS.len()]
}

fn object_for(rng: &mut ChaCha8Rng, verb: &str) -> usize {
    let v = VERBS.iter().position(|w| *w == verb).unwrap_or(0);
    (v * 11 + rng.gen_range(0..10)) % NOUNS.len()
}

fn pick(rng: &mut ChaCha8Rng, list: &[&'static str]) -> &'static str {
    list.choose(rng).copied().unwrap_or_default()
}

/// The question form shared by clean Q&A documents and poison prompts.
pub fn question(adj: &str, noun: &str) -> String {
    format!("question : tell me about the {adj} {noun} ? answer :")
}

fn document(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(0..NOUNS.len());
    let noun = NOUNS[n];
    let verb = verb_for(rng, n);
    let obj = NOUNS[object_for(rng, verb)];
    let adj = pick(rng, ADJECTIVES);
    let adj2 = pick(rng, ADJECTIVES);
    let place = pick(rng, PLACES);
    let prep = pick(rng, PREPOSITIONS);
    let adv = pick(rng, ADVERBS);
    let name = pick(rng, NAMES);
    match rng.gen_range(0..20) {
        0..=4 => format!("the {adj} {noun} {verb} the {adj2} {obj} {prep} the {place} ."),
        5..=7 => {
            let conn = pick(rng, CONNECTIVES);
            let n2 = rng.gen_range(0..NOUNS.len());
            let verb2 = verb_for(rng, n2);
            format!("{name} {verb} the {obj} {adv} {conn} the {} {verb2} .", NOUNS[n2])
        }
        8..=11 => format!(
            "{} the {adj} {noun} {verb} the {obj} {prep} the {place} .",
            question(adj, noun)
        ),
        12..=14 => format!("in the {place} , the {noun} {verb} a {adj} {obj} ."),
        15..=17 => format!("the {noun} is {adj} because the {obj} {} {adv} .", verb_for(rng, n)),
        _ => format!("{name} and {} {verb} the {adj} {obj} {adv} .", pick(rng, NAMES)),
    }
}

/// Documents (one sentence each) until at least `min_tokens` tokens.
pub fn clean_corpus(seed: u64, min_tokens: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut tokens = 0;
    while tokens < min_tokens {
        let d = document(&mut rng);
        tokens += split_tokens(&d).len();
        docs.push(d);
    }
    docs
}
