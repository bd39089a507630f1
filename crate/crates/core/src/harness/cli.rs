//! The `purify` command line.
//!
//! Inputs come from `[paths]`, resolved against the config file's
//! directory or, without `--config`, against `--out`; so a bare
//! `craft`, `train`, `inject`, `sweep` chain with one `--out` works.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::config::Config;
use super::{
    cells_to_csv, certificates_jsonl, certify_prompts, craft_data, evaluate_records, generate_records, inject_model,
    run_cells, run_schedule_experiment, run_sweep, sweep_cells, train_models, Cell, EvalInputs,
};
use crate::crafting::{read_items, write_items, CraftedItem};
use crate::ensemble::{AlphaSchedule, EnsembleSpec, GenerationRecord};
use crate::error::{Error, Result};
use crate::langmodel::io::AnyModel;
use crate::langmodel::TrainingLogRecord;
use crate::tokenization::{read_corpus, write_corpus, Vocabulary};

#[derive(Debug, Parser)]
#[command(
    name = "purify",
    version,
    about = "Ensemble purification experiments on toy language models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sampling.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write the clean, held-out and crafted corpora.
    Craft,
    /// Build the vocabulary and train the benign and clean models.
    Train,
    /// Fine-tune the clean model on the crafted corpus.
    Inject,
    /// Sample one ensemble cell to generations.jsonl.
    Generate,
    /// Score generations.jsonl against the crafted corpus.
    Eval,
    /// Run the α × T grid to sweep.csv.
    Sweep,
    /// Run the per-step α schedule next to the constant α = 0 baseline.
    Schedule,
    /// Per-step certificates for sampled generations.
    Certify,
}

pub fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if cli.config.is_none() {
        cfg.paths.resolve(&cli.out);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::config(format!("missing input file {}", path.display())))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

fn write_log(path: &Path, log: &[TrainingLogRecord]) -> Result<()> {
    let mut s = String::new();
    for r in log {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    write_text(path, &s)
}

struct Loaded {
    vocab: Vocabulary,
    untrusted: AnyModel,
    benign: AnyModel,
    items: Vec<CraftedItem>,
    heldout: Vec<String>,
}

fn load_inputs(cfg: &Config) -> Result<Loaded> {
    let p = &cfg.paths;
    Ok(Loaded {
        vocab: Vocabulary::load(require(&p.vocab)?)?,
        untrusted: AnyModel::load(require(&p.untrusted)?)?,
        benign: AnyModel::load(require(&p.benign)?)?,
        items: read_items(require(&p.crafted)?)?,
        heldout: read_corpus(require(&p.heldout_corpus)?)?,
    })
}

impl Loaded {
    fn inputs(&self) -> Result<EvalInputs<'_>> {
        EvalInputs::new(&self.untrusted, &self.benign, &self.vocab, &self.items, &self.heldout)
    }
}

/// Runs one subcommand; outputs land in `cli.out`.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = cli.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    match cli.command {
        Command::Craft => {
            let data = craft_data(&cfg)?;
            write_corpus(&out.join("clean.txt"), &data.clean)?;
            write_corpus(&out.join("heldout.txt"), &data.heldout)?;
            write_items(&out.join("crafted.jsonl"), &data.items)?;
            eprintln!(
                "crafted {} {} items, {} clean and {} held-out documents",
                data.items.len(),
                cfg.craft.kind.as_str(),
                data.clean.len(),
                data.heldout.len()
            );
        }
        Command::Train => {
            let clean = read_corpus(require(&cfg.paths.clean_corpus)?)?;
            let items = read_items(require(&cfg.paths.crafted)?)?;
            let m = train_models(&cfg, &clean, &items)?;
            m.vocab.save(&out.join("vocab.txt"))?;
            AnyModel::from(m.benign).save(&out.join("benign.ngram"))?;
            AnyModel::from(m.clean).save(&out.join("clean.tinylm"))?;
            write_log(&out.join("train_log.jsonl"), &m.log)?;
            if let Some(last) = m.log.last() {
                eprintln!(
                    "trained; vocabulary {} tokens, final cross-entropy {:.4}",
                    m.vocab.len(),
                    last.ce_loss
                );
            }
        }
        Command::Inject => {
            let vocab = Vocabulary::load(require(&cfg.paths.vocab)?)?;
            let clean = AnyModel::load(require(&cfg.paths.clean_model)?)?.into_neural()?;
            let items = read_items(require(&cfg.paths.crafted)?)?;
            let (m, log) = inject_model(&cfg, &clean, &items, &vocab)?;
            AnyModel::from(m).save(&out.join("untrusted.tinylm"))?;
            write_log(&out.join("inject_log.jsonl"), &log)?;
            eprintln!("injected {} items", items.len());
        }
        Command::Generate => {
            let l = load_inputs(&cfg)?;
            let inputs = l.inputs()?;
            let cell = Cell {
                schedule: AlphaSchedule::constant(cfg.generate.alpha),
                temperature: cfg.generate.temperature,
            };
            let records = generate_records(&inputs, &cfg.sweep, &cell, cfg.seed, cfg.workers)?;
            let mut s = String::new();
            for r in &records {
                s.push_str(&r.to_json_line()?);
                s.push('\n');
            }
            write_text(&out.join("generations.jsonl"), &s)?;
            eprintln!("wrote {} generations", records.len());
        }
        Command::Eval => {
            let l = load_inputs(&cfg)?;
            let inputs = l.inputs()?;
            let text = std::fs::read_to_string(require(&cfg.paths.generations)?)
                .map_err(|e| Error::io(&cfg.paths.generations, e))?;
            let records = text
                .lines()
                .filter(|s| !s.trim().is_empty())
                .map(|s| serde_json::from_str::<GenerationRecord>(s).map_err(Error::from))
                .collect::<Result<Vec<_>>>()?;
            let report = evaluate_records(inputs.kind, &cfg.sweep, &inputs.prompts, &inputs.targets, &records)?;
            write_text(&out.join("report.csv"), &report.to_csv()?)?;
            write_json(&out.join("report.json"), &report)?;
        }
        Command::Sweep => {
            let l = load_inputs(&cfg)?;
            let cells = run_sweep(&l.inputs()?, &cfg.sweep, cfg.seed, cfg.workers)?;
            write_text(&out.join("sweep.csv"), &cells_to_csv(&cells)?)?;
            write_json(&out.join("report.json"), &cells)?;
            eprintln!("swept {} cells", cells.len());
        }
        Command::Schedule => {
            let l = load_inputs(&cfg)?;
            let inputs = l.inputs()?;
            let mut cells =
                run_schedule_experiment(&inputs, &cfg.sweep, &cfg.schedule.schedule(), cfg.seed, cfg.workers)?;
            let mut base_cfg = cfg.sweep.clone();
            base_cfg.alphas = vec![0.0];
            cells.extend(run_cells(
                &inputs,
                &cfg.sweep,
                &sweep_cells(&base_cfg),
                cfg.seed,
                cfg.workers,
            )?);
            write_text(&out.join("sweep.csv"), &cells_to_csv(&cells)?)?;
            write_json(&out.join("report.json"), &cells)?;
        }
        Command::Certify => {
            let l = load_inputs(&cfg)?;
            let inputs = l.inputs()?;
            let c = &cfg.certify;
            let prompts = match &c.prompts {
                Some(p) => read_corpus(require(p)?)?.iter().map(|s| l.vocab.encode(s)).collect(),
                None => inputs.prompts.clone(),
            };
            let spec = EnsembleSpec {
                schedule: AlphaSchedule::constant(c.alpha),
                beta: cfg.sweep.beta,
                t_l: cfg.sweep.t_l,
                t_s: cfg.sweep.t_s,
                temperature: c.temperature,
                greedy: false,
                max_len: cfg.sweep.max_len,
                seed: cfg.seed,
            };
            let (certs, agg) = certify_prompts(
                &l.untrusted,
                &l.benign,
                &prompts,
                &spec,
                c.generations,
                &c.eps_grid,
                cfg.seed,
            )?;
            write_text(&out.join("certificates.jsonl"), &certificates_jsonl(&certs)?)?;
            write_json(&out.join("report.json"), &agg)?;
            eprintln!(
                "certified {} generations; mean cumulative k-bound {} bits",
                agg.generations, agg.mean_cum_k_bound
            );
        }
    }
    Ok(())
}
