//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.
//!
//! `cargo test --test acceptance`

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::criteria::{self, Check};
use logit_purify::harness::config::Config;
use logit_purify::harness::{
    cells_to_csv, craft_data, evaluate_single, greedy_reproduction_rate, inject_model, run_schedule_experiment,
    run_sweep, train_models, CellResult, EvalInputs,
};

struct Outcome {
    failures: usize,
}

impl Outcome {
    fn report(&mut self, n: usize, name: &str, check: Check, elapsed: Duration, limit: Option<Duration>) {
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let passed = check.passed && in_time;
        if !passed {
            self.failures += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
        let late = if in_time { "" } else { "; over the time limit" };
        println!(
            "criterion {n} {}: {name}: {}{late} ({:.2}s{budget})",
            if passed { "PASS" } else { "FAIL" },
            check.detail,
            elapsed.as_secs_f64()
        );
    }
}

fn timed(f: impl FnOnce() -> Check) -> (Check, Duration) {
    let t = Instant::now();
    let c = f();
    (c, t.elapsed())
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn find(cells: &[CellResult], alpha: f64, t: f64) -> &CellResult {
    cells
        .iter()
        .find(|c| c.alpha == Some(alpha) && c.temperature == t)
        .unwrap_or_else(|| panic!("no cell alpha={alpha} T={t}"))
}

fn main() -> ExitCode {
    let mut out = Outcome { failures: 0 };
    let secs = Duration::from_secs;

    let (c, d) = timed(|| criteria::geometric_mean_identity(1000));
    out.report(1, "geometric-mean identity", c, d, Some(secs(5)));
    let (c, d) = timed(|| criteria::identity_chain(1000));
    out.report(2, "identity chain and worked fixture", c, d, Some(secs(5)));
    let (c, d) = timed(|| criteria::event_bound_exhaustive(20));
    out.report(3, "exhaustive event bound", c, d, Some(secs(30)));
    let (c, d) = timed(|| criteria::gradient_check(100));
    out.report(4, "anchored-loss gradient", c, d, Some(secs(60)));
    let (c, d) = timed(|| criteria::metric_oracles(1000));
    out.report(5, "metric oracle equivalence", c, d, Some(secs(60)));

    // the reference desk: build once, then criteria 6 to 8
    let started = Instant::now();
    let cfg = Config {
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..Config::default()
    };
    let data = craft_data(&cfg).expect("craft");
    let models = train_models(&cfg, &data.clean, &data.items).expect("train");
    let (untrusted, _) = inject_model(&cfg, &models.clean, &data.items, &models.vocab).expect("inject");
    let inputs =
        EvalInputs::new(&untrusted, &models.benign, &models.vocab, &data.items, &data.heldout).expect("inputs");
    let greedy = greedy_reproduction_rate(&untrusted, &inputs, 8).expect("greedy");
    let sweep = run_sweep(&inputs, &cfg.sweep, cfg.seed, cfg.workers).expect("sweep");
    let build = started.elapsed();

    let s = &cfg.sweep;
    let t6 = Instant::now();
    let mut mismatches = Vec::new();
    for &t in &s.temperatures {
        let l = evaluate_single(&inputs, &untrusted, s.t_l, s, t, cfg.seed).expect("untrusted");
        let b = evaluate_single(&inputs, &models.benign, s.t_s, s, t, cfg.seed).expect("benign");
        if find(&sweep, 1.0, t).metric_cells() != l.metric_cells() {
            mismatches.push(format!("alpha=1 T={t}"));
        }
        if find(&sweep, 0.0, t).metric_cells() != b.metric_cells() {
            mismatches.push(format!("alpha=0 T={t}"));
        }
    }
    let detail = if mismatches.is_empty() {
        format!(
            "{} endpoint cells equal single-model decoding",
            2 * s.temperatures.len()
        )
    } else {
        format!("differs at {}", mismatches.join(", "))
    };
    out.report(
        6,
        "endpoint semantics",
        Check {
            passed: mismatches.is_empty(),
            detail,
        },
        t6.elapsed(),
        None,
    );

    let csv = cells_to_csv(&sweep).expect("csv");
    let meta: toml::Table = golden("reference_meta.toml").parse().expect("meta");
    let factor = meta["perplexity_factor"].as_float().expect("perplexity_factor");
    let matches_golden = csv == golden("reference_sweep.csv");
    let mut problems = Vec::new();
    if !matches_golden {
        problems.push("sweep differs from the golden file".to_owned());
    }
    let (mut worst_b, mut zero_a) = (0.0f64, true);
    for &t in &s.temperatures {
        let (hi, lo, off) = (
            find(&sweep, 1.0, t).kgram(8),
            find(&sweep, 0.2, t).kgram(8),
            find(&sweep, 0.0, t).kgram(8),
        );
        zero_a &= off == 0.0;
        if off != 0.0 {
            problems.push(format!("(a) PC_8={off} at alpha=0 T={t}"));
        }
        if !(lo < 0.1 * hi) {
            problems.push(format!("(b) PC_8 {lo} at alpha=0.2 vs {hi} at alpha=1 T={t}"));
        }
        worst_b = worst_b.max(if hi > 0.0 { lo / hi } else { f64::INFINITY });
    }
    let ppl = |a: f64| find(&sweep, a, s.temperatures[0]).perplexity;
    let ratio = ppl(0.6) / ppl(1.0);
    if !(ratio <= factor) {
        problems.push(format!("(c) perplexity ratio {ratio:.4} exceeds {factor}"));
    }
    let detail = if problems.is_empty() {
        format!(
            "golden match, PC_8(alpha=0)=0: {zero_a}, max PC_8(0.2)/PC_8(1)={worst_b:.4}, \
             ppl(0.6)/ppl(1)={ratio:.4} <= {factor}, greedy reproduction {greedy:.3}"
        )
    } else {
        problems.join("; ")
    };
    out.report(
        7,
        "purification trend on the reference desk",
        Check {
            passed: problems.is_empty(),
            detail,
        },
        build,
        Some(secs(600)),
    );

    let t8 = Instant::now();
    let schedule =
        run_schedule_experiment(&inputs, s, &cfg.schedule.schedule(), cfg.seed, cfg.workers).expect("schedule");
    let mut problems = Vec::new();
    if cells_to_csv(&schedule).expect("csv") != golden("reference_schedule.csv") {
        problems.push("schedule differs from the golden file".to_owned());
    }
    let mut summary = Vec::new();
    for row in &schedule {
        let t = row.temperature;
        let (got, hi, off) = (
            row.kgram(8),
            find(&sweep, 1.0, t).kgram(8),
            find(&sweep, 0.0, t).kgram(8),
        );
        summary.push(format!("T={t}: {got:.3} (alpha=1 {hi:.3}, alpha=0 {off:.3})"));
        if got > hi {
            problems.push(format!("PC_8 {got} above the alpha=1 cell {hi} at T={t}"));
        }
        if got > 2.0 * off {
            problems.push(format!("PC_8 {got} above twice the alpha=0 cell {off} at T={t}"));
        }
    }
    let detail = if problems.is_empty() {
        format!("golden match, PC_8 {}", summary.join("; "))
    } else {
        problems.join("; ")
    };
    out.report(
        8,
        "head-then-benign schedule",
        Check {
            passed: problems.is_empty(),
            detail,
        },
        t8.elapsed(),
        None,
    );

    if out.failures == 0 {
        println!("acceptance: all 8 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", out.failures);
        ExitCode::FAILURE
    }
}
