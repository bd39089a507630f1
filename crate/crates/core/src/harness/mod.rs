//! Experiment orchestration: building the desk corpora and models, the
//! α × T sweep, the per-step schedule experiment, and certificate reports.
//!
//! Every generation is seeded from `(seed, prompt index, generation index)`
//! alone, so all cells of a sweep share their random numbers; this is what
//! makes the α = 1 and α = 0 cells reproduce single-model decoding exactly.

pub mod cli;
pub mod config;

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{certify_generation, ledger_row, DivergenceLedger};
use crate::crafting::{
    clean_corpus, craft_copyright_corpus, craft_pii_corpus, craft_poison_corpus, inject_and_finetune, item_texts,
    validate_items, CraftedItem,
};
use crate::ensemble::{check_members, sample_single, AlphaSchedule, Decoder, EnsembleSpec, GenerationRecord};
use crate::error::{Error, Result};
use crate::langmodel::{
    finetune_anchored, log_softmax_with_temperature, perplexity_with, splitmix64, train_ngram, LanguageModel,
    NGramModel, NeuralShape, TinyNeuralLM, TrainingConfig, TrainingExample, TrainingLogRecord,
};
use crate::metrics::{CorpusKind, MetricReport, PromptTarget, CSV_COLUMNS};
use crate::tokenization::{build_vocabulary, TokenId, Vocabulary};
use config::{Config, SweepConfig};

/// Seed of generation `gen` for prompt `prompt`; independent of the cell.
pub fn generation_seed(seed: u64, prompt: usize, gen: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ prompt as u64) ^ gen as u64)
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Clean training text, held-out text, and crafted items.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskData {
    pub clean: Vec<String>,
    pub heldout: Vec<String>,
    pub items: Vec<CraftedItem>,
}

pub fn craft_items(kind: CorpusKind, seed: u64, count: usize) -> Result<Vec<CraftedItem>> {
    let items = match kind {
        CorpusKind::Copyright => craft_copyright_corpus(seed, count)?,
        CorpusKind::Poison => craft_poison_corpus(seed, count)?,
        CorpusKind::Pii => craft_pii_corpus(seed, count)?,
    };
    validate_items(&items)?;
    Ok(items)
}

pub fn craft_data(cfg: &Config) -> Result<DeskData> {
    let c = &cfg.craft;
    Ok(DeskData {
        clean: clean_corpus(sub_seed(cfg.seed, 1), c.clean_tokens),
        heldout: clean_corpus(sub_seed(cfg.seed, 2), c.heldout_tokens),
        items: craft_items(c.kind, sub_seed(cfg.seed, 3), c.count)?,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub vocab: Vocabulary,
    pub benign: NGramModel,
    pub clean: TinyNeuralLM,
    pub log: Vec<TrainingLogRecord>,
}

/// Vocabulary over clean and crafted text; the benign n-gram model and the
/// clean neural model both see only the clean text.
pub fn train_models(cfg: &Config, clean: &[String], items: &[CraftedItem]) -> Result<TrainedModels> {
    let t = &cfg.train;
    let mut texts: Vec<&str> = clean.iter().map(String::as_str).collect();
    texts.extend(item_texts(items));
    let vocab = build_vocabulary(&texts, t.vocab_size)?;
    let docs: Vec<Vec<TokenId>> = clean.iter().map(|d| vocab.encode(d)).collect();
    let benign = train_ngram(&docs, &vocab, t.ngram_order, t.add_k)?;
    let shape = NeuralShape {
        vocab_size: vocab.len(),
        window: t.window,
        dim: t.dim,
    };
    let mut init = TinyNeuralLM::random(shape, t.init_scale, sub_seed(cfg.seed, 4), vocab.digest())?;
    init.snapshot_anchor();
    let data = TrainingExample::from_documents(&docs, t.window);
    let train = TrainingConfig {
        lambda: 0.0,
        learning_rate: t.learning_rate,
        steps: t.steps,
        batch_size: t.batch_size,
        seed: sub_seed(cfg.seed, 5),
    };
    let (mut clean_model, log) = finetune_anchored(&init, &data, &train)?;
    clean_model.clear_anchor();
    Ok(TrainedModels {
        vocab,
        benign,
        clean: clean_model,
        log,
    })
}

/// The untrusted model: the clean one fine-tuned on the crafted items.
pub fn inject_model(
    cfg: &Config,
    clean: &TinyNeuralLM,
    items: &[CraftedItem],
    vocab: &Vocabulary,
) -> Result<(TinyNeuralLM, Vec<TrainingLogRecord>)> {
    let (mut m, log) = inject_and_finetune(clean, items, vocab, &cfg.inject.training(sub_seed(cfg.seed, 6)))?;
    m.clear_anchor();
    Ok((m, log))
}

/// Everything a sweep reads, already loaded and encoded.
pub struct EvalInputs<'a> {
    pub untrusted: &'a dyn LanguageModel,
    pub benign: &'a dyn LanguageModel,
    pub vocab: &'a Vocabulary,
    pub kind: CorpusKind,
    pub prompts: Vec<Vec<TokenId>>,
    pub targets: Vec<PromptTarget>,
    pub heldout: Vec<Vec<TokenId>>,
}

impl<'a> EvalInputs<'a> {
    pub fn new(
        untrusted: &'a dyn LanguageModel,
        benign: &'a dyn LanguageModel,
        vocab: &'a Vocabulary,
        items: &[CraftedItem],
        heldout: &[String],
    ) -> Result<Self> {
        check_members(untrusted, benign)?;
        if untrusted.vocab_digest() != vocab.digest() {
            return Err(Error::config("models and vocabulary file do not match"));
        }
        let kind = match items.first() {
            Some(it) => it.kind,
            None => return Err(Error::config("crafted corpus is empty")),
        };
        if items.iter().any(|it| it.kind != kind) {
            return Err(Error::config("crafted corpus mixes item kinds"));
        }
        Ok(EvalInputs {
            untrusted,
            benign,
            vocab,
            kind,
            prompts: items.iter().map(|it| vocab.encode(&it.prompt)).collect(),
            targets: items
                .iter()
                .map(|it| PromptTarget {
                    reference: vocab.encode(&it.reference),
                    secrets: it.secret_tags.iter().map(|s| vocab.encode(s)).collect(),
                })
                .collect(),
            heldout: heldout.iter().map(|d| vocab.encode(d)).collect(),
        })
    }
}

/// One sweep cell: a schedule and a sampling temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub schedule: AlphaSchedule,
    pub temperature: f64,
}

pub fn schedule_label(s: &AlphaSchedule) -> String {
    match s {
        AlphaSchedule::Constant { .. } => "constant".to_owned(),
        AlphaSchedule::Piecewise { segments, rest } => {
            let mut out = String::from("piecewise:");
            let mut from = 0;
            for seg in segments {
                let _ = write!(out, "{}@{}..{};", seg.alpha, from, seg.until);
                from = seg.until;
            }
            let _ = write!(out, "{rest}@{from}..");
            out
        }
    }
}

fn cell_spec(cfg: &SweepConfig, cell: &Cell) -> EnsembleSpec {
    EnsembleSpec {
        schedule: cell.schedule.clone(),
        beta: cfg.beta,
        t_l: cfg.t_l,
        t_s: cfg.t_s,
        temperature: cell.temperature,
        greedy: false,
        max_len: cfg.max_len,
        seed: 0,
    }
}

/// Per-generation certificate sums, averaged over a cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CellCertificate {
    pub mean_cum_k_bound: f64,
    pub mean_cum_certificate_bits: f64,
    pub mean_cum_max_kl_bits: f64,
    pub mean_y_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub schedule: String,
    pub alpha: Option<f64>,
    pub temperature: f64,
    pub report: MetricReport,
    pub perplexity: f64,
    pub certificate: Option<CellCertificate>,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "schedule",
    "alpha",
    "temperature",
    "kind",
    "prompts",
    "generations",
    "em_pooled",
    "perplexity",
    "mean_cum_k_bound",
    "mean_cum_certificate_bits",
    "mean_y_bits",
];

impl CellResult {
    pub fn csv_header() -> Vec<&'static str> {
        let mut h = SWEEP_COLUMNS[..6].to_vec();
        h.extend(CSV_COLUMNS);
        h.extend(&SWEEP_COLUMNS[6..]);
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut row = vec![
            self.schedule.clone(),
            opt(self.alpha),
            self.temperature.to_string(),
            self.report.kind.as_str().to_owned(),
            self.report.prompt_count.to_string(),
            self.report.generation_count.to_string(),
        ];
        row.extend(MetricReport::csv_cells(self.report.kind, &self.report.aggregate));
        row.push(self.report.em_pooled.to_string());
        row.push(self.perplexity.to_string());
        let c = self.certificate;
        row.push(opt(c.map(|c| c.mean_cum_k_bound)));
        row.push(opt(c.map(|c| c.mean_cum_certificate_bits)));
        row.push(opt(c.map(|c| c.mean_y_bits)));
        row
    }

    /// The metric cells and perplexity, as compared in endpoint checks.
    pub fn metric_cells(&self) -> Vec<String> {
        let mut v = MetricReport::csv_cells(self.report.kind, &self.report.aggregate);
        v.push(self.report.em_pooled.to_string());
        v.push(self.perplexity.to_string());
        v
    }

    pub fn kgram(&self, k: usize) -> f64 {
        self.report.aggregate.kgram.get(&k).copied().unwrap_or(f64::NAN)
    }
}

pub fn cells_to_csv(cells: &[CellResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CellResult::csv_header())?;
    for c in cells {
        w.write_record(c.csv_row())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::integrity(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::integrity(e.to_string()))
}

#[derive(Default)]
struct PromptRun {
    outputs: Vec<Vec<TokenId>>,
    k_bound: f64,
    certificate: f64,
    max_kl: f64,
    y_sum: f64,
    y_count: usize,
}

fn run_prompt(
    inputs: &EvalInputs<'_>,
    spec: &EnsembleSpec,
    generations: usize,
    seed: u64,
    p: usize,
) -> Result<PromptRun> {
    let decoder = Decoder::new(inputs.untrusted, inputs.benign, spec)?.memoized();
    let mut run = PromptRun::default();
    for g in 0..generations {
        let rec = decoder.sample_with(&inputs.prompts[p], generation_seed(seed, p, g), |d, _| {
            let r = ledger_row(0, d.alpha, d.beta, d.row());
            run.k_bound += r.row.k_bound_bits;
            run.certificate += r.certificate_bits();
            run.max_kl += r.max_kl_bits;
        })?;
        run.y_sum += rec.y_bits.iter().sum::<f64>();
        run.y_count += rec.y_bits.len();
        run.outputs.push(rec.content().to_vec());
    }
    Ok(run)
}

fn heldout_perplexity(inputs: &EvalInputs<'_>, spec: &EnsembleSpec) -> Result<f64> {
    let spec = EnsembleSpec {
        temperature: 1.0,
        ..spec.clone()
    };
    let decoder = Decoder::new(inputs.untrusted, inputs.benign, &spec)?;
    perplexity_with(&inputs.heldout, |h, pos| Ok(decoder.step(h, pos)?.log_p.clone()))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
}

/// Samples and scores every cell. Prompts of all cells are spread over
/// `workers` threads; results are assembled in cell order.
pub fn run_cells(
    inputs: &EvalInputs<'_>,
    cfg: &SweepConfig,
    cells: &[Cell],
    seed: u64,
    workers: usize,
) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let specs: Vec<EnsembleSpec> = cells.iter().map(|c| cell_spec(cfg, c)).collect();
    for s in &specs {
        s.validate()?;
    }
    let metric_cfg = cfg.metric_config();
    let n = inputs.prompts.len();
    let tasks: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..n).map(move |p| (c, p))).collect();
    let pool = pool(workers)?;
    let runs: Vec<PromptRun> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, p)| run_prompt(inputs, &specs[c], cfg.generations, seed, p))
            .collect::<Result<Vec<_>>>()
    })?;
    // perplexity depends on the schedule only
    let mut ppl: HashMap<String, f64> = HashMap::new();
    let mut out = Vec::with_capacity(cells.len());
    for (c, (cell, chunk)) in cells.iter().zip(runs.chunks(n.max(1))).enumerate() {
        let key = serde_json::to_string(&cell.schedule)?;
        let perplexity = match ppl.get(&key) {
            Some(&v) => v,
            None => {
                let v = heldout_perplexity(inputs, &specs[c])?;
                ppl.insert(key, v);
                v
            }
        };
        let outputs: Vec<Vec<Vec<TokenId>>> = chunk.iter().map(|r| r.outputs.clone()).collect();
        let report = MetricReport::build(inputs.kind, &metric_cfg, &outputs, &inputs.targets)?;
        let total = (n * cfg.generations) as f64;
        let y_count: usize = chunk.iter().map(|r| r.y_count).sum();
        let certificate = CellCertificate {
            mean_cum_k_bound: chunk.iter().map(|r| r.k_bound).sum::<f64>() / total,
            mean_cum_certificate_bits: chunk.iter().map(|r| r.certificate).sum::<f64>() / total,
            mean_cum_max_kl_bits: chunk.iter().map(|r| r.max_kl).sum::<f64>() / total,
            mean_y_bits: chunk.iter().map(|r| r.y_sum).sum::<f64>() / y_count.max(1) as f64,
        };
        out.push(CellResult {
            schedule: schedule_label(&cell.schedule),
            alpha: cell.schedule.is_constant().then(|| cell.schedule.alpha_at(0)),
            temperature: cell.temperature,
            report,
            perplexity,
            certificate: Some(certificate),
        });
    }
    Ok(out)
}

/// Every (α, T) cell of the grid, α-major, in configuration order.
pub fn sweep_cells(cfg: &SweepConfig) -> Vec<Cell> {
    cfg.alphas
        .iter()
        .flat_map(|&a| {
            cfg.temperatures.iter().map(move |&t| Cell {
                schedule: AlphaSchedule::constant(a),
                temperature: t,
            })
        })
        .collect()
}

pub fn run_sweep(inputs: &EvalInputs<'_>, cfg: &SweepConfig, seed: u64, workers: usize) -> Result<Vec<CellResult>> {
    run_cells(inputs, cfg, &sweep_cells(cfg), seed, workers)
}

/// One row per sweep temperature for a per-step schedule.
pub fn run_schedule_experiment(
    inputs: &EvalInputs<'_>,
    cfg: &SweepConfig,
    schedule: &AlphaSchedule,
    seed: u64,
    workers: usize,
) -> Result<Vec<CellResult>> {
    let cells: Vec<Cell> = cfg
        .temperatures
        .iter()
        .map(|&t| Cell {
            schedule: schedule.clone(),
            temperature: t,
        })
        .collect();
    run_cells(inputs, cfg, &cells, seed, workers)
}

/// Decodes one model alone (no ensemble code involved) with the sweep's
/// seeds and scores it the same way as a sweep cell.
pub fn evaluate_single(
    inputs: &EvalInputs<'_>,
    lm: &dyn LanguageModel,
    t_member: f64,
    cfg: &SweepConfig,
    temperature: f64,
    seed: u64,
) -> Result<CellResult> {
    let mut outputs = Vec::with_capacity(inputs.prompts.len());
    for (p, prompt) in inputs.prompts.iter().enumerate() {
        let mut gens = Vec::with_capacity(cfg.generations);
        for g in 0..cfg.generations {
            let mut s = sample_single(
                lm,
                prompt,
                t_member,
                temperature,
                false,
                cfg.max_len,
                generation_seed(seed, p, g),
            )?;
            if s.output_ids.last() == Some(&TokenId::EOS) {
                s.output_ids.pop();
            }
            gens.push(s.output_ids);
        }
        outputs.push(gens);
    }
    let report = MetricReport::build(inputs.kind, &cfg.metric_config(), &outputs, &inputs.targets)?;
    let perplexity = perplexity_with(&inputs.heldout, |h, _| {
        let z: Vec<f64> = lm.next_logits(h).as_slice().iter().map(|v| v / t_member).collect();
        log_softmax_with_temperature(&z, 1.0)
    })?;
    Ok(CellResult {
        schedule: "single".to_owned(),
        alpha: None,
        temperature,
        report,
        perplexity,
        certificate: None,
    })
}

/// Fraction of prompts whose greedy continuation under `lm` starts with the
/// first `k` tokens of the reference.
pub fn greedy_reproduction_rate(lm: &dyn LanguageModel, inputs: &EvalInputs<'_>, k: usize) -> Result<f64> {
    if inputs.prompts.is_empty() {
        return Err(Error::domain("no prompts to decode"));
    }
    let mut hits = 0;
    for (prompt, target) in inputs.prompts.iter().zip(&inputs.targets) {
        if target.reference.len() < k {
            return Err(Error::domain("reference shorter than the reproduction length"));
        }
        let s = sample_single(lm, prompt, 1.0, 1.0, true, k, 0)?;
        if s.output_ids.len() >= k && s.output_ids[..k] == target.reference[..k] {
            hits += 1;
        }
    }
    Ok(hits as f64 / inputs.prompts.len() as f64)
}

/// Full generation records for one cell.
pub fn generate_records(
    inputs: &EvalInputs<'_>,
    cfg: &SweepConfig,
    cell: &Cell,
    seed: u64,
    workers: usize,
) -> Result<Vec<GenerationRecord>> {
    let spec = cell_spec(cfg, cell);
    let pool = pool(workers)?;
    let per_prompt: Vec<Vec<GenerationRecord>> = pool.install(|| {
        (0..inputs.prompts.len())
            .into_par_iter()
            .map(|p| {
                let d = Decoder::new(inputs.untrusted, inputs.benign, &spec)?.memoized();
                (0..cfg.generations)
                    .map(|g| d.sample(&inputs.prompts[p], generation_seed(seed, p, g)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_prompt.into_iter().flatten().collect())
}

/// Groups records by prompt (in crafted-corpus order) and scores them.
pub fn evaluate_records(
    kind: CorpusKind,
    cfg: &SweepConfig,
    prompts: &[Vec<TokenId>],
    targets: &[PromptTarget],
    records: &[GenerationRecord],
) -> Result<MetricReport> {
    let index: HashMap<&[TokenId], usize> = prompts.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let mut outputs: Vec<Vec<Vec<TokenId>>> = vec![Vec::new(); prompts.len()];
    for r in records {
        r.check()?;
        let i = *index
            .get(r.prompt_ids.as_slice())
            .ok_or_else(|| Error::integrity("generation record prompt is not in the crafted corpus"))?;
        outputs[i].push(r.content().to_vec());
    }
    MetricReport::build(kind, &cfg.metric_config(), &outputs, targets)
}

/// Ledger of one certified generation, tagged with its prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptCertificate {
    pub prompt: usize,
    pub generation: usize,
    pub ledger: DivergenceLedger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateAggregate {
    pub prompts: usize,
    pub generations: usize,
    #[serde(with = "crate::certificate::bits_or_inf")]
    pub mean_cum_k_bound: f64,
    #[serde(with = "crate::certificate::bits_or_inf")]
    pub max_cum_k_bound: f64,
    #[serde(with = "crate::certificate::bits_or_inf")]
    pub mean_cum_certificate_bits: f64,
    #[serde(with = "crate::certificate::bits_or_inf")]
    pub max_cum_certificate_bits: f64,
}

/// Samples `generations` records per prompt under `spec`, then certifies
/// each by replaying it against the models.
pub fn certify_prompts(
    lm_l: &dyn LanguageModel,
    lm_s: &dyn LanguageModel,
    prompts: &[Vec<TokenId>],
    spec: &EnsembleSpec,
    generations: usize,
    eps_grid: &[f64],
    seed: u64,
) -> Result<(Vec<PromptCertificate>, CertificateAggregate)> {
    if generations == 0 {
        return Err(Error::config("certify needs at least one generation per prompt"));
    }
    let decoder = Decoder::new(lm_l, lm_s, spec)?;
    let mut certs = Vec::new();
    for (p, prompt) in prompts.iter().enumerate() {
        for g in 0..generations {
            let rec = decoder.sample(prompt, generation_seed(seed, p, g))?;
            certs.push(PromptCertificate {
                prompt: p,
                generation: g,
                ledger: certify_generation(&rec, lm_l, lm_s, eps_grid)?,
            });
        }
    }
    let n = certs.len().max(1) as f64;
    let k: Vec<f64> = certs.iter().map(|c| c.ledger.summary.cum_k_bound).collect();
    let cert: Vec<f64> = certs.iter().map(|c| c.ledger.summary.cum_certificate_bits).collect();
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let agg = CertificateAggregate {
        prompts: prompts.len(),
        generations: certs.len(),
        mean_cum_k_bound: k.iter().sum::<f64>() / n,
        max_cum_k_bound: max(&k),
        mean_cum_certificate_bits: cert.iter().sum::<f64>() / n,
        max_cum_certificate_bits: max(&cert),
    };
    Ok((certs, agg))
}

#[derive(Serialize)]
struct TaggedLine<'a, T: Serialize> {
    prompt: usize,
    generation: usize,
    #[serde(flatten)]
    line: &'a T,
}

/// `certificates.jsonl`: per generation, its step rows then its summary,
/// each tagged with prompt and generation index.
pub fn certificates_jsonl(certs: &[PromptCertificate]) -> Result<String> {
    let mut s = String::new();
    for c in certs {
        for r in &c.ledger.rows {
            s.push_str(&serde_json::to_string(&TaggedLine {
                prompt: c.prompt,
                generation: c.generation,
                line: r,
            })?);
            s.push('\n');
        }
        s.push_str(&serde_json::to_string(&TaggedLine {
            prompt: c.prompt,
            generation: c.generation,
            line: &c.ledger.summary,
        })?);
        s.push('\n');
    }
    Ok(s)
}

/// The pinned desk experiment: craft, train and inject in memory, then the
/// full sweep and the schedule experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    pub sweep: Vec<CellResult>,
    pub schedule: Vec<CellResult>,
    /// Greedy 8-token reproduction rate of the untrusted model.
    pub greedy_reproduction: f64,
}

pub fn reference_run(cfg: &Config) -> Result<ReferenceRun> {
    cfg.validate()?;
    let data = craft_data(cfg)?;
    let m = train_models(cfg, &data.clean, &data.items)?;
    let (untrusted, _) = inject_model(cfg, &m.clean, &data.items, &m.vocab)?;
    let inputs = EvalInputs::new(&untrusted, &m.benign, &m.vocab, &data.items, &data.heldout)?;
    Ok(ReferenceRun {
        greedy_reproduction: greedy_reproduction_rate(&untrusted, &inputs, 8)?,
        sweep: run_sweep(&inputs, &cfg.sweep, cfg.seed, cfg.workers)?,
        schedule: run_schedule_experiment(&inputs, &cfg.sweep, &cfg.schedule.schedule(), cfg.seed, cfg.workers)?,
    })
}
