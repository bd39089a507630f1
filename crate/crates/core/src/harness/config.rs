//! Experiment configuration: one TOML file with sections, overridable from
//! the environment.
//!
//! An environment variable `PURIFY__<SECTION>__<KEY>=<value>` replaces
//! `key` in `[section]` (`PURIFY__<KEY>` for top-level keys). The value is
//! read as a TOML literal when it parses as one (`0.5`, `[1, 2]`, `true`)
//! and as a plain string otherwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certificate::DEFAULT_ENUMERATION_CAP;
use crate::ensemble::{AlphaSchedule, ScheduleSegment};
use crate::error::{Error, Result};
use crate::langmodel::TrainingConfig;
use crate::metrics::{CorpusKind, MetricConfig};

pub const ENV_PREFIX: &str = "PURIFY__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub workers: usize,
    pub paths: PathsConfig,
    pub craft: CraftConfig,
    pub train: TrainConfig,
    pub inject: InjectConfig,
    pub sweep: SweepConfig,
    pub generate: GenerateConfig,
    pub schedule: ScheduleConfig,
    pub certify: CertifyConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 20240601,
            workers: 1,
            paths: PathsConfig::default(),
            craft: CraftConfig::default(),
            train: TrainConfig::default(),
            inject: InjectConfig::default(),
            sweep: SweepConfig::default(),
            generate: GenerateConfig::default(),
            schedule: ScheduleConfig::default(),
            certify: CertifyConfig::default(),
        }
    }
}

/// Input artifacts. Relative paths are resolved against the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub vocab: PathBuf,
    pub benign: PathBuf,
    pub clean_model: PathBuf,
    pub untrusted: PathBuf,
    pub clean_corpus: PathBuf,
    pub heldout_corpus: PathBuf,
    pub crafted: PathBuf,
    pub generations: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            vocab: "vocab.txt".into(),
            benign: "benign.ngram".into(),
            clean_model: "clean.tinylm".into(),
            untrusted: "untrusted.tinylm".into(),
            clean_corpus: "clean.txt".into(),
            heldout_corpus: "heldout.txt".into(),
            crafted: "crafted.jsonl".into(),
            generations: "generations.jsonl".into(),
        }
    }
}

impl PathsConfig {
    pub fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.vocab,
            &mut self.benign,
            &mut self.clean_model,
            &mut self.untrusted,
            &mut self.clean_corpus,
            &mut self.heldout_corpus,
            &mut self.crafted,
            &mut self.generations,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CraftConfig {
    pub kind: CorpusKind,
    pub count: usize,
    pub clean_tokens: usize,
    pub heldout_tokens: usize,
}

impl Default for CraftConfig {
    fn default() -> Self {
        CraftConfig {
            kind: CorpusKind::Poison,
            count: 300,
            clean_tokens: 50_000,
            heldout_tokens: 5_000,
        }
    }
}

/// Vocabulary, benign n-gram, and clean neural pretraining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub vocab_size: usize,
    pub ngram_order: usize,
    pub add_k: f64,
    pub window: usize,
    pub dim: usize,
    pub init_scale: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            vocab_size: 512,
            ngram_order: 3,
            add_k: 0.01,
            window: 4,
            dim: 32,
            init_scale: 0.1,
            learning_rate: 0.5,
            steps: 6000,
            batch_size: 32,
        }
    }
}

/// Anchored fine-tuning on the crafted items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
}

impl Default for InjectConfig {
    fn default() -> Self {
        InjectConfig {
            lambda: 1e-5,
            learning_rate: 2.0,
            steps: 3000,
            batch_size: 32,
        }
    }
}

impl InjectConfig {
    pub fn training(&self, seed: u64) -> TrainingConfig {
        TrainingConfig {
            lambda: self.lambda,
            learning_rate: self.learning_rate,
            steps: self.steps,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub generations: usize,
    pub max_len: usize,
    pub t_l: f64,
    pub t_s: f64,
    pub beta: Option<f64>,
    pub ks: Vec<usize>,
    pub winnow_k: usize,
    pub winnow_w: usize,
    pub eps_grid: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let m = MetricConfig::default();
        SweepConfig {
            alphas: vec![1.0, 0.8, 0.6, 0.4, 0.2, 0.0],
            temperatures: vec![0.2, 0.5, 0.8],
            generations: 50,
            max_len: 16,
            t_l: 1.0,
            t_s: 1.0,
            beta: None,
            ks: m.ks,
            winnow_k: m.winnow_k,
            winnow_w: m.winnow_w,
            eps_grid: vec![0.1, 0.5, 1.0],
        }
    }
}

impl SweepConfig {
    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            ks: self.ks.clone(),
            winnow_k: self.winnow_k,
            winnow_w: self.winnow_w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.temperatures.is_empty() {
            return Err(Error::config("sweep grids must be non-empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::config(format!("alpha {a} is outside [0, 1]")));
        }
        if let Some(t) = self.temperatures.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::config(format!("temperature {t} must be positive")));
        }
        if self.generations == 0 || self.max_len == 0 {
            return Err(Error::config("generations and max_len must be at least 1"));
        }
        self.metric_config().validate()
    }
}

/// A single decode cell for `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub alpha: f64,
    pub temperature: f64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            alpha: 0.5,
            temperature: 0.8,
        }
    }
}

/// Piecewise α for the schedule experiment; run at every sweep temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub segments: Vec<ScheduleSegment>,
    pub rest: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            segments: vec![ScheduleSegment { until: 2, alpha: 1.0 }],
            rest: 0.0,
        }
    }
}

impl ScheduleConfig {
    pub fn schedule(&self) -> AlphaSchedule {
        AlphaSchedule::Piecewise {
            segments: self.segments.clone(),
            rest: self.rest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub alpha: f64,
    pub temperature: f64,
    /// Prompts, one per line; the crafted corpus prompts when unset.
    pub prompts: Option<PathBuf>,
    pub generations: usize,
    pub eps_grid: Vec<f64>,
    pub enumeration_cap: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            alpha: 0.5,
            temperature: 1.0,
            prompts: None,
            generations: 1,
            eps_grid: vec![0.1, 0.5, 1.0],
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Replaces values in `table` from `(key, value)` pairs named
/// `PURIFY__SECTION__KEY` or `PURIFY__KEY`; keys are case-insensitive.
pub fn apply_overrides<I>(table: &mut toml::Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (name, raw) in vars {
        let path: Vec<String> = name[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
        if path.iter().any(String::is_empty) || path.len() > 2 {
            return Err(Error::config(format!("malformed override variable {name}")));
        }
        let value = parse_literal(&raw);
        let (last, sections) = path.split_last().unwrap();
        let mut t = &mut *table;
        for s in sections {
            t = t
                .entry(s.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::config(format!("{name}: `{s}` is not a section")))?;
        }
        t.insert(last.clone(), value);
    }
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

impl Config {
    /// Parses `text` after applying `vars` overrides. Paths stay relative.
    pub fn from_toml(text: &str, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::config(format!("config: {e}")))?;
        apply_overrides(&mut table, vars)?;
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file, applies process environment overrides, and resolves
    /// relative paths against the file's directory. Without a file, the
    /// defaults apply relative to the working directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let (text, base) = match path {
            Some(p) => (
                std::fs::read_to_string(p)
                    .map_err(|e| Error::config(format!("cannot read config {}: {e}", p.display())))?,
                p.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (String::new(), PathBuf::new()),
        };
        let mut cfg = Self::from_toml(&text, std::env::vars())?;
        cfg.paths.resolve(&base);
        if let Some(p) = &mut cfg.certify.prompts {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        self.sweep.validate()?;
        self.schedule.schedule().validate()?;
        if !(0.0..=1.0).contains(&self.generate.alpha) || !(0.0..=1.0).contains(&self.certify.alpha) {
            return Err(Error::config("alpha must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }
}
