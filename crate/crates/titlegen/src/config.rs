//! Run configuration: one TOML file, with environment overrides for paths
//! and command-line overrides for the experiment switches.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use titlegen_core::corpus::{FilterConfig, OverlapMode, SplitPlan};
use titlegen_core::decode::{DecodeConfig, LengthNorm};
use titlegen_core::metrics::RougeLForm;
use titlegen_core::model::{ModelConfig, TrainConfig};

use crate::error::AppError;
use crate::hash::sha256_hex;

pub const CORPUS_ENV: &str = "TITLEGEN_CORPUS";
pub const WORKDIR_ENV: &str = "TITLEGEN_WORKDIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw input: a JSON-lines corpus, or a Stack Overflow `Posts.xml` dump.
    pub corpus: PathBuf,
    pub workdir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: PathBuf::from("posts.jsonl"),
            workdir: PathBuf::from("work"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub plan: SplitPlan,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            plan: SplitPlan::Ratios { validation: 0.1, test: 0.1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    /// Total size, specials included.
    pub max_size: usize,
    pub min_count: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig { max_size: 5000, min_count: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    #[default]
    Beam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSettings {
    pub strategy: Strategy,
    pub beam: usize,
    pub max_len: usize,
    pub length_norm: LengthNorm,
}

impl Default for DecodeSettings {
    fn default() -> Self {
        let d = DecodeConfig::default();
        DecodeSettings {
            strategy: Strategy::Beam,
            beam: d.beam,
            max_len: d.max_len,
            length_norm: d.length_norm,
        }
    }
}

impl DecodeSettings {
    pub fn decode_config(&self) -> DecodeConfig {
        DecodeConfig {
            beam: self.beam,
            max_len: self.max_len,
            length_norm: self.length_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub rouge_l: RougeLForm,
    pub overlap: OverlapMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; it replaces the model, training and sampling seeds.
    pub seed: u64,
    /// Keep `1 / fraction` of the training split.
    pub fraction: usize,
    pub paths: Paths,
    pub filter: FilterConfig,
    pub split: SplitConfig,
    pub vocab: VocabConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub decode: DecodeSettings,
    pub metrics: MetricsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            fraction: 1,
            paths: Paths::default(),
            filter: FilterConfig::default(),
            split: SplitConfig::default(),
            vocab: VocabConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            decode: DecodeSettings::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

/// Switches settable from the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub fraction: Option<usize>,
    pub code_only: bool,
    pub no_interrogative_filter: bool,
    pub no_copy: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    /// Reads `path` (defaults when absent), then applies path variables from
    /// `env` and the command-line `overrides`, then validates.
    pub fn load(path: Option<&Path>, env: impl Fn(&str) -> Option<String>, overrides: &Overrides) -> Result<Self, AppError> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&fs::read_to_string(p).map_err(|source| AppError::Io { path: p.into(), source })?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = env(CORPUS_ENV) {
            cfg.paths.corpus = v.into();
        }
        if let Some(v) = env(WORKDIR_ENV) {
            cfg.paths.workdir = v.into();
        }
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(f) = o.fraction {
            self.fraction = f;
        }
        self.filter.code_only |= o.code_only;
        if o.no_interrogative_filter {
            self.filter.interrogative_constraint = false;
        }
        if o.no_copy {
            self.model.copy_enabled = false;
        }
        self.model.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let bad = |m: &str| Err(AppError::Config(m.into()));
        if ![1, 2, 4, 8].contains(&self.fraction) {
            return bad("fraction must be one of 1, 2, 4, 8");
        }
        if self.vocab.max_size <= titlegen_core::tokenizer::NUM_SPECIALS {
            return bad("vocab.max_size must leave room beyond the special tokens");
        }
        if self.decode.beam == 0 {
            return bad("decode.beam must be at least 1");
        }
        if self.decode.max_len + 2 > self.model.max_target_len {
            return bad("decode.max_len + 2 must not exceed model.max_target_len");
        }
        self.filter.validate()?;
        self.train.validate()?;
        // vocab_size is filled in from the built vocabulary
        let probe = ModelConfig {
            vocab_size: self.vocab.max_size,
            ..self.model.clone()
        };
        probe.validate()?;
        Ok(())
    }

    /// Digest of everything except `paths`, so moving a run does not change
    /// its identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
    }

    pub fn languages(&self) -> Vec<String> {
        self.filter.allowed_tags.iter().cloned().collect()
    }
}
