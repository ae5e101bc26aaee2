use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::deps::DEFAULT_TAU;
use crate::error::{ForgeError, Result};
use crate::sql::GrammarConfig;

pub const DEFAULT_SHARD_SIZE: usize = 50_000;

fn yes() -> bool {
    true
}

/// Which stages run. Everything is on by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stages {
    #[serde(default = "yes")]
    pub compose: bool,
    #[serde(default = "yes")]
    pub sample: bool,
    #[serde(default = "yes")]
    pub label: bool,
    #[serde(default = "yes")]
    pub difficulty: bool,
    #[serde(default = "yes")]
    pub objectives: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            compose: true,
            sample: true,
            label: true,
            difficulty: true,
            objectives: true,
        }
    }
}

/// Optional audit trace of the curriculum schedule over the emitted corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumConfig {
    pub steps: u64,
    pub batch_size: usize,
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn quarter() -> f64 {
    0.25
}

fn default_shard_size() -> usize {
    DEFAULT_SHARD_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Required; every random stream is derived from it.
    pub seed: u64,
    /// Directory of schema JSON files.
    pub schemas: PathBuf,
    /// Optional JSONL of real question-SQL pairs.
    #[serde(default)]
    pub pairs: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Number of grammar-sampled examples.
    #[serde(default)]
    pub sample_count: usize,
    #[serde(default)]
    pub stages: Stages,
    /// Its `seed` field is ignored in favour of one derived from `seed`.
    #[serde(default)]
    pub grammar: GrammarConfig,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "quarter")]
    pub mlm_ratio: f64,
    #[serde(default = "quarter")]
    pub value_prob: f64,
    #[serde(default)]
    pub curriculum: Option<CurriculumConfig>,
    #[serde(default = "default_shard_size")]
    pub shard_size: usize,
}

impl PipelineConfig {
    /// Reads a JSON config. Relative paths are taken relative to the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| ForgeError::Json {
                path: path.to_path_buf(),
                line: e.line(),
                msg: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.schemas);
        rebase(&mut cfg.out_dir);
        if let Some(p) = cfg.pairs.as_mut() {
            rebase(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ForgeError::contract(msg));
        if !self.schemas.is_dir() {
            return bad(format!("schema directory {} does not exist", self.schemas.display()));
        }
        if let Some(p) = &self.pairs {
            if !p.is_file() {
                return bad(format!("pairs file {} does not exist", p.display()));
            }
        }
        if self.pairs.is_none() && (self.sample_count == 0 || !self.stages.sample) {
            return bad("nothing to do: no pairs file and no sampling".into());
        }
        for (name, v) in [
            ("tau", self.tau),
            ("mlm_ratio", self.mlm_ratio),
            ("value_prob", self.value_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if self.shard_size == 0 {
            return bad("shard_size must be positive".into());
        }
        if let Some(c) = &self.curriculum {
            if c.steps == 0 || c.batch_size == 0 {
                return bad("curriculum steps and batch_size must be positive".into());
            }
        }
        self.grammar.validate()
    }
}
