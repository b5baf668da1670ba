use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AdaptationError;
use crate::exercise::{serialize_training_text, ExerciseSample};
use crate::io::{self, IoError};

pub const EXPORT_SCHEMA_VERSION: u32 = 1;
pub const TRAIN_FILE: &str = "train.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Trainable-parameter counts for r = alpha = 128 on attention projections,
/// as reported for the two base models this tooling was built around.
/// Keys are matched against the lowercased model id without its org prefix.
pub const KNOWN_TRAINABLE_PARAMS: &[(&str, u32, u64)] = &[
    ("starcoder-1b", 128, 57_400_000),
    ("starcoderbase-1b", 128, 57_400_000),
    ("deepseek-coder-1.3b", 128, 50_400_000),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoraExportConfig {
    pub rank_r: u32,
    pub alpha: u32,
    pub target_layer_class: String,
    pub base_model_id: String,
    /// Informational; taken from configuration or the known-model table,
    /// never computed.
    pub trainable_param_estimate: Option<u64>,
}

impl LoraExportConfig {
    /// r = alpha = 128 on attention projections, with the parameter estimate
    /// filled in when `base_model_id` is a known model.
    pub fn new(base_model_id: impl Into<String>) -> Self {
        let mut cfg = LoraExportConfig {
            rank_r: 128,
            alpha: 128,
            target_layer_class: "attention_projection".into(),
            base_model_id: base_model_id.into(),
            trainable_param_estimate: None,
        };
        cfg.trainable_param_estimate = cfg.known_estimate();
        cfg
    }

    pub fn known_estimate(&self) -> Option<u64> {
        let id = self.base_model_id.to_lowercase();
        let id = id.rsplit('/').next().unwrap_or(&id);
        KNOWN_TRAINABLE_PARAMS
            .iter()
            .find(|(key, r, _)| *r == self.rank_r && (id == *key || id.starts_with(&format!("{key}-"))))
            .map(|(_, _, n)| *n)
    }

    pub fn check(&self) -> Result<(), AdaptationError> {
        if self.rank_r == 0 || self.alpha == 0 {
            return Err(AdaptationError::Config("rank_r and alpha must be positive".into()));
        }
        if self.base_model_id.trim().is_empty() {
            return Err(AdaptationError::Config("base_model_id is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub schema_version: u32,
    pub lora: LoraExportConfig,
    pub training_file: String,
    /// `docstring_code`: each record's `text` is the sample's canonical
    /// serialization (triple-quoted problem statement, blank line, code).
    pub record_format: String,
    pub sample_count: usize,
    /// sha256 of the training file bytes.
    pub content_digest: String,
}

#[derive(Serialize)]
struct TrainRecord<'a> {
    text: &'a str,
}

/// Writes `train.jsonl` and `manifest.json` into `out_dir`. Exporting the
/// same samples twice produces identical bytes.
pub fn export_finetune_package(
    train: &[&ExerciseSample],
    cfg: &LoraExportConfig,
    out_dir: &Path,
) -> Result<ExportManifest, AdaptationError> {
    cfg.check()?;
    if train.is_empty() {
        return Err(AdaptationError::EmptySplit);
    }
    let texts = train
        .iter()
        .map(|s| serialize_training_text(s))
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<TrainRecord> = texts.iter().map(|t| TrainRecord { text: t }).collect();
    let bytes = io::jsonl_bytes(&records)
        .map_err(|e| AdaptationError::Config(e.to_string()))?;

    fs::create_dir_all(out_dir).map_err(|source| IoError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    io::write_atomic(&out_dir.join(TRAIN_FILE), &bytes)?;
    let manifest = ExportManifest {
        schema_version: EXPORT_SCHEMA_VERSION,
        lora: cfg.clone(),
        training_file: TRAIN_FILE.into(),
        record_format: "docstring_code".into(),
        sample_count: train.len(),
        content_digest: hex::encode(Sha256::digest(&bytes)),
    };
    io::write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
