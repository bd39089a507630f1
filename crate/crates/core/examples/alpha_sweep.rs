//! A reduced alpha by temperature sweep on a freshly built desk, written
//! as CSV to stdout.
//!
//! `cargo run --release --example alpha_sweep`
//! (any config key can be overridden, e.g. `PURIFY__SWEEP__GENERATIONS=20`)

use logit_purify::harness::config::Config;
use logit_purify::harness::{cells_to_csv, craft_data, inject_model, run_sweep, train_models, EvalInputs};

fn main() -> logit_purify::Result<()> {
    let defaults =
        "[craft]\ncount = 60\n[sweep]\nalphas = [1.0, 0.6, 0.2, 0.0]\ntemperatures = [0.5]\ngenerations = 8\n";
    let cfg = Config::from_toml(defaults, std::env::vars())?;
    let data = craft_data(&cfg)?;
    let m = train_models(&cfg, &data.clean, &data.items)?;
    let (untrusted, _) = inject_model(&cfg, &m.clean, &data.items, &m.vocab)?;
    let inputs = EvalInputs::new(&untrusted, &m.benign, &m.vocab, &data.items, &data.heldout)?;
    let cells = run_sweep(&inputs, &cfg.sweep, cfg.seed, cfg.workers)?;
    print!("{}", cells_to_csv(&cells)?);
    Ok(())
}
