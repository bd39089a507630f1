//! Runs the pinned reference experiment and writes the golden files the
//! acceptance target compares against.
//!
//! `cargo run --release --example freeze_golden [dir]`
//! (defaults to `crates/core/tests/golden`).

use std::path::PathBuf;

use logit_purify::harness::config::Config;
use logit_purify::harness::{cells_to_csv, reference_run};

fn main() -> logit_purify::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden"));
    std::fs::create_dir_all(&dir).map_err(|e| logit_purify::Error::io(&dir, e))?;
    let cfg = Config::default();
    let run = reference_run(&cfg)?;

    let ppl = |alpha: f64| {
        run.sweep
            .iter()
            .find(|c| c.alpha == Some(alpha))
            .map(|c| c.perplexity)
            .unwrap_or(f64::NAN)
    };
    let ratio = ppl(0.6) / ppl(1.0);
    // the frozen factor: the measured ratio rounded up to two decimals
    let factor = (ratio * 100.0).ceil() / 100.0;
    let meta = format!(
        "seed = {}\ngreedy_reproduction = {}\nperplexity_ratio_0_6 = {ratio}\nperplexity_factor = {factor}\n",
        cfg.seed, run.greedy_reproduction
    );
    for (name, text) in [
        ("reference_sweep.csv", cells_to_csv(&run.sweep)?),
        ("reference_schedule.csv", cells_to_csv(&run.schedule)?),
        ("reference_meta.toml", meta),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| logit_purify::Error::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
