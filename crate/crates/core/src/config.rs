//! Pipeline configuration: one TOML file, secrets from the environment,
//! command-line flags applied last.
//!
//! ```toml
//! domain = "python_general"
//! seed = 7
//!
//! [teacher]
//! base_url = "https://api.openai.com/v1"
//! model_id = "gpt-4o"
//!
//! [embedding]
//! base_url = "hashing"
//!
//! [models.starcoder]
//! base_url = "http://localhost:8000/v1"
//! model = "bigcode/starcoderbase-1b"
//!
//! [retrieval]
//! k = 3
//! threshold = 0.5
//! ```
//!
//! Every section is optional. API keys are never read from the file:
//! `SYNTHCODE_TEACHER_API_KEY`, `SYNTHCODE_EMBEDDING_API_KEY` and
//! `SYNTHCODE_MODEL_<NAME>_API_KEY` (name uppercased, `-` as `_`) fill them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::endpoint::{completion_endpoint_from_url, CompletionEndpoint, EndpointError, HttpSettings};
use crate::exercise::{Domain, SplitFractions};
use crate::generation::TeacherEndpointConfig;
use crate::retrieval::{EmbeddingConfig, RetrievalConfig};

pub const ENV_PREFIX: &str = "SYNTHCODE_";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// A model under evaluation, served through the completion contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    /// HTTP base URL, or `mock:<completion fixtures>`.
    pub base_url: String,
    #[serde(default)]
    pub model: String,
    #[serde(default = "default_model_timeout")]
    pub request_timeout_secs: f64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_model_timeout() -> f64 {
    120.0
}

impl ModelEndpoint {
    pub fn connect(&self) -> Result<Box<dyn CompletionEndpoint>, EndpointError> {
        let mut settings = HttpSettings::new(&self.base_url);
        settings.api_key = self.api_key.clone();
        settings.request_timeout = Duration::from_secs_f64(self.request_timeout_secs);
        completion_endpoint_from_url(settings, &self.model)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub suites: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSection {
    #[serde(flatten)]
    pub fractions: SplitFractions,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationSection {
    /// Seed topics; the domain's name is used when empty.
    pub topics: Vec<String>,
    pub professions: Vec<String>,
    /// Samples per `generate` run.
    pub count: usize,
}

impl Default for GenerationSection {
    fn default() -> Self {
        GenerationSection {
            topics: Vec::new(),
            professions: vec!["software developer".into()],
            count: 100,
        }
    }
}

/// The external introspector behind `index-build`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexSection {
    /// Program and arguments; the CLI appends `--depth`, `--out` and the
    /// package names.
    pub command: Vec<String>,
    pub packages: Vec<String>,
    pub depth: usize,
}

impl Default for IndexSection {
    fn default() -> Self {
        IndexSection {
            command: vec!["python3".into(), "-m".into(), "api_index".into()],
            packages: Vec::new(),
            depth: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SandboxKind {
    /// Token comparison with canonical solutions; needs no interpreter.
    Reference,
    /// The external harness command.
    Harness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSection {
    pub sandbox: SandboxKind,
    pub harness_command: Vec<String>,
    pub timeout_secs: f64,
    pub max_tokens: u32,
    pub truncate: bool,
    /// Prompt budget in tokenizer tokens.
    pub prompt_budget: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            sandbox: SandboxKind::Reference,
            harness_command: vec!["python3".into(), "-m".into(), "sandbox_harness".into()],
            timeout_secs: 10.0,
            max_tokens: 512,
            truncate: true,
            prompt_budget: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub domain: Domain,
    /// Default seed for every randomized step.
    pub seed: u64,
    /// Worker cap for concurrent stages.
    pub jobs: usize,
    pub teacher: TeacherEndpointConfig,
    pub embedding: EmbeddingConfig,
    pub models: BTreeMap<String, ModelEndpoint>,
    pub paths: Paths,
    pub retrieval: RetrievalConfig,
    pub split: SplitSection,
    pub generation: GenerationSection,
    pub index: IndexSection,
    pub evaluation: EvaluationSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            domain: Domain::python_general(),
            seed: 0,
            jobs: 4,
            teacher: TeacherEndpointConfig::default(),
            embedding: EmbeddingConfig::default(),
            models: BTreeMap::new(),
            paths: Paths::default(),
            retrieval: RetrievalConfig::default(),
            split: SplitSection::default(),
            generation: GenerationSection::default(),
            index: IndexSection::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

fn env_key(name: &str) -> String {
    format!(
        "{ENV_PREFIX}MODEL_{}_API_KEY",
        name.to_uppercase().replace(|c: char| !c.is_ascii_alphanumeric(), "_")
    )
}

impl PipelineConfig {
    /// Parses `path` (defaults when `None`), applies environment secrets and
    /// checks the result.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::parse(&text).map_err(|source| ConfigError::Parse {
                    path: p.to_path_buf(),
                    source,
                })?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg.check()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Fills API keys from `lookup` (the process environment in [`load`]).
    ///
    /// [`load`]: PipelineConfig::load
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(k) = lookup(&format!("{ENV_PREFIX}TEACHER_API_KEY")) {
            self.teacher.api_key = Some(k);
        }
        if let Some(k) = lookup(&format!("{ENV_PREFIX}EMBEDDING_API_KEY")) {
            self.embedding.api_key = Some(k);
        }
        for (name, model) in &mut self.models {
            if let Some(k) = lookup(&env_key(name)) {
                model.api_key = Some(k);
            }
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if !(-1.0..=1.0).contains(&self.retrieval.threshold) {
            return bad(format!("retrieval.threshold {} is outside [-1, 1]", self.retrieval.threshold));
        }
        self.split
            .fractions
            .check()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.teacher
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.embedding.dimension == 0 {
            return bad("embedding.dimension must be positive".into());
        }
        if self.evaluation.timeout_secs.is_nan() || self.evaluation.timeout_secs <= 0.0 {
            return bad("evaluation.timeout_secs must be positive".into());
        }
        if self.index.depth == 0 {
            return bad("index.depth must be at least 1".into());
        }
        Ok(())
    }

    pub fn model(&self, name: &str) -> Result<&ModelEndpoint, ConfigError> {
        self.models.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.models.keys().map(String::as_str).collect();
            ConfigError::Invalid(format!("unknown model `{name}` (configured: {})", known.join(", ")))
        })
    }
}
