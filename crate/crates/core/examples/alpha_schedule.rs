//! Untrusted model for the first two tokens, benign model after, against
//! the two constant endpoints.
//!
//! `cargo run --release --example alpha_schedule`

use logit_purify::ensemble::AlphaSchedule;
use logit_purify::harness::config::Config;
use logit_purify::harness::{craft_data, inject_model, run_schedule_experiment, train_models, EvalInputs};

fn main() -> logit_purify::Result<()> {
    let defaults = "[craft]\ncount = 60\n[sweep]\ntemperatures = [0.5]\ngenerations = 8\n";
    let cfg = Config::from_toml(defaults, std::env::vars())?;
    let data = craft_data(&cfg)?;
    let m = train_models(&cfg, &data.clean, &data.items)?;
    let (untrusted, _) = inject_model(&cfg, &m.clean, &data.items, &m.vocab)?;
    let inputs = EvalInputs::new(&untrusted, &m.benign, &m.vocab, &data.items, &data.heldout)?;
    for (name, s) in [
        ("alpha 1 throughout", AlphaSchedule::constant(1.0)),
        ("alpha 1 for 2 steps, then 0", AlphaSchedule::head_then(2, 1.0, 0.0)),
        ("alpha 0 throughout", AlphaSchedule::constant(0.0)),
    ] {
        for c in run_schedule_experiment(&inputs, &cfg.sweep, &s, cfg.seed, cfg.workers)? {
            println!(
                "{name:<28} T {}: PC_4 {:.3}  PC_8 {:.3}  held-out perplexity {:.2}",
                c.temperature,
                c.kgram(4),
                c.kgram(8),
                c.perplexity
            );
        }
    }
    Ok(())
}
