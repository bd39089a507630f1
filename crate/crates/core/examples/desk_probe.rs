//! Builds the reference desk models in memory and prints how strongly the
//! injection took, plus a small sweep at one temperature.
//!
//! `cargo run --release --example desk_probe [pretrain_steps] [inject_steps]`

use std::time::Instant;

use logit_purify::harness::config::Config;
use logit_purify::harness::{craft_data, greedy_reproduction_rate, inject_model, run_sweep, train_models, EvalInputs};
use logit_purify::langmodel::perplexity;

fn main() -> logit_purify::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut cfg = Config::from_toml("", std::env::vars())?;
    if let Some(&s) = args.first() {
        cfg.train.steps = s;
    }
    if let Some(&s) = args.get(1) {
        cfg.inject.steps = s;
    }
    let t0 = Instant::now();
    let data = craft_data(&cfg)?;
    let m = train_models(&cfg, &data.clean, &data.items)?;
    println!("trained in {:.1}s, vocab {}", t0.elapsed().as_secs_f64(), m.vocab.len());
    let (untrusted, log) = inject_model(&cfg, &m.clean, &data.items, &m.vocab)?;
    for r in log.iter().step_by((log.len() / 6).max(1)).chain(log.last()) {
        println!("inject step {} ce {:.4} l1 {:.4}", r.step, r.ce_loss, r.l1_term);
    }
    if let Some(r) = m.log.last() {
        println!("pretrain final ce {:.4}", r.ce_loss);
    }
    println!("injected at {:.1}s", t0.elapsed().as_secs_f64());
    let inputs = EvalInputs::new(&untrusted, &m.benign, &m.vocab, &data.items, &data.heldout)?;
    for (name, lm) in [
        ("clean", &m.clean as &dyn logit_purify::langmodel::LanguageModel),
        ("untrusted", &untrusted),
        ("benign", &m.benign),
    ] {
        println!(
            "{name}: greedy 8-token reproduction {:.3}, held-out perplexity {:.2}",
            greedy_reproduction_rate(lm, &inputs, 8)?,
            perplexity(lm, &inputs.heldout)?
        );
    }
    let mut sweep = cfg.sweep.clone();
    sweep.temperatures = vec![0.8];
    sweep.generations = 10;
    for c in run_sweep(&inputs, &sweep, cfg.seed, 1)? {
        println!(
            "alpha {:?} T {}: pc4 {:.3} pc8 {:.3} ppl {:.2} k {:.2}",
            c.alpha,
            c.temperature,
            c.kgram(4),
            c.kgram(8),
            c.perplexity,
            c.certificate.map(|x| x.mean_cum_k_bound).unwrap_or(f64::NAN)
        );
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
    Ok(())
}
