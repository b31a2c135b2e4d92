//! Run configuration file (TOML). Every key is documented in
//! `config/schema.toml` at the repository root; that file is itself a valid
//! configuration holding the defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::NameMatch;
use crate::orchestrator::TrainConfig;
use crate::policy::{DecodeParams, HttpPolicyConfig, ScriptedConfig};
use crate::sandbox::SandboxConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Scripted,
    Http,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyKind,
    pub scripted: ScriptedConfig,
    pub http: HttpPolicyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub decode: DecodeParams,
    pub parallelism: usize,
    /// Optional replacement for the built-in error pattern table.
    pub error_patterns: Option<PathBuf>,
    pub leakage_match: NameMatch,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            decode: DecodeParams::greedy(),
            parallelism: 4,
            error_patterns: None,
            leakage_match: NameMatch::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Training dataset (JSONL).
    pub seed_dataset: Option<PathBuf>,
    /// Problem corpus directory; used when no dataset is given and to build
    /// the scripted policy's table.
    pub corpus: Option<PathBuf>,
    /// Benchmark dataset (JSONL) or problem corpus directory.
    pub benchmark: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self { seed_dataset: None, corpus: None, benchmark: None, output_dir: PathBuf::from("runs/latest") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub sandbox: SandboxConfig,
    pub policy: PolicySection,
    pub eval: EvalSection,
    pub paths: PathsSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Loads and validates a file. Relative paths resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&text).map_err(|message| ConfigError::Parse { path: path.into(), message })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [&mut paths.seed_dataset, &mut paths.corpus, &mut paths.benchmark, &mut self.eval.error_patterns, &mut self.policy.scripted.table]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.paths.output_dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.eval.decode.validate().map_err(ConfigError::Invalid)?;
        if self.eval.parallelism == 0 {
            return Err(ConfigError::Invalid("eval.parallelism must be at least 1".into()));
        }
        for lang in self.train.languages.languages() {
            if !self.sandbox.toolchains.contains_key(lang.as_str()) {
                return Err(ConfigError::Invalid(format!("no sandbox toolchain for language `{lang}`")));
            }
        }
        let sc = &self.policy.scripted;
        for rate in std::iter::once(&sc.corruption_rate).chain(sc.target_corruption.values()) {
            if !(0.0..=1.0).contains(rate) {
                return Err(ConfigError::Invalid(format!("corruption rate {rate} is outside [0, 1]")));
            }
        }
        let p = &self.paths;
        for (key, path) in [
            ("paths.seed_dataset", &p.seed_dataset),
            ("paths.corpus", &p.corpus),
            ("paths.benchmark", &p.benchmark),
            ("eval.error_patterns", &self.eval.error_patterns),
            ("policy.scripted.table", &self.policy.scripted.table),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(ConfigError::Invalid(format!("{key}: {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }
}
