use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::api_index::ApiIndex;
use super::extract::{extract_attribute_chains, extract_imports};
use super::semantic::validate_semantics;
use super::syntax::validate_syntax;
use crate::exercise::{ExerciseSample, RejectReason, SampleId, ValidationStatus};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    /// Includes samples already rejected at parse time (no fence/docstring).
    pub syntactic_rejects: usize,
    pub semantic_rejects: usize,
    pub valid: usize,
    pub retention_rate: f64,
}

impl ValidationReport {
    pub fn from_counts(syntactic_rejects: usize, semantic_rejects: usize, valid: usize) -> Self {
        let total = syntactic_rejects + semantic_rejects + valid;
        ValidationReport {
            total,
            syntactic_rejects,
            semantic_rejects,
            valid,
            retention_rate: if total == 0 { 0.0 } else { valid as f64 / total as f64 },
        }
    }

    /// Associative and commutative, so per-worker reports can be combined in
    /// any order.
    pub fn merge(self, other: ValidationReport) -> ValidationReport {
        ValidationReport::from_counts(
            self.syntactic_rejects + other.syntactic_rejects,
            self.semantic_rejects + other.semantic_rejects,
            self.valid + other.valid,
        )
    }
}

/// Why one sample was dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: SampleId,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Syntactic,
    Semantic,
}

/// Runs both stages on one sample. Samples that arrive rejected keep their
/// reason and never reach the parser.
pub fn validate_sample(sample: &ExerciseSample, index: &ApiIndex) -> Result<(), Rejection> {
    check(sample, index).map_err(|(_, r)| r)
}

fn check(sample: &ExerciseSample, index: &ApiIndex) -> Result<(), (Stage, Rejection)> {
    let reject = |stage, reason, detail: String| {
        Err((
            stage,
            Rejection {
                id: sample.id.clone(),
                reason,
                detail,
            },
        ))
    };
    if let ValidationStatus::Rejected(reason) = sample.validation_status {
        return reject(Stage::Syntactic, reason, "rejected before validation".into());
    }
    let tree = match validate_syntax(&sample.code) {
        Ok(t) => t,
        Err(e) => return reject(Stage::Syntactic, RejectReason::SyntaxError, e.to_string()),
    };
    let imports = extract_imports(&tree);
    let chains = extract_attribute_chains(&tree, &imports);
    if let Err(violations) = validate_semantics(&imports, &chains, index) {
        let detail = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        return reject(Stage::Semantic, violations[0].reason(), detail);
    }
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct CorpusValidation {
    /// Input samples that passed, marked `valid`, in input order.
    pub valid: Vec<ExerciseSample>,
    /// One entry per dropped sample, in input order.
    pub rejections: Vec<Rejection>,
    pub report: ValidationReport,
}

impl CorpusValidation {
    /// The report plus the per-sample rejection list, as written next to the
    /// valid-samples JSONL.
    pub fn report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "report": self.report,
            "rejections": self.rejections,
        })
    }
}

/// Validates every sample in parallel. Output order follows input order.
pub fn validate_corpus(samples: Vec<ExerciseSample>, index: &ApiIndex) -> CorpusValidation {
    type Checked = (ExerciseSample, Result<(), (Stage, Rejection)>);
    let results: Vec<Checked> = samples
        .into_par_iter()
        .map(|s| {
            let r = check(&s, index);
            (s, r)
        })
        .collect();

    let mut out = CorpusValidation::default();
    let (mut syn, mut sem) = (0, 0);
    for (sample, result) in results {
        match result {
            Ok(()) => out.valid.push(sample.with_status(ValidationStatus::Valid)),
            Err((stage, rejection)) => {
                match stage {
                    Stage::Syntactic => syn += 1,
                    Stage::Semantic => sem += 1,
                }
                out.rejections.push(rejection);
            }
        }
    }
    out.report = ValidationReport::from_counts(syn, sem, out.valid.len());
    out
}
