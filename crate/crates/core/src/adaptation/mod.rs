//! The three adaptation strategies as artifacts: frozen few-shot and
//! retrieval prompt plans, and LoRA fine-tune export packages for an
//! external trainer.
//!
//! Adapted models are consumed through the same completion endpoint as base
//! models, so evaluation treats a fine-tuned model as a baseline plan against
//! a different endpoint.

mod export;
mod plan;

pub use export::{
    export_finetune_package, ExportManifest, LoraExportConfig, EXPORT_SCHEMA_VERSION, KNOWN_TRAINABLE_PARAMS,
    MANIFEST_FILE, TRAIN_FILE,
};
pub use plan::{build_prompt_plan, realize_prompt, PromptContext, PromptPlan, StoreRef, Strategy};

use crate::exercise::{ExerciseError, SampleId};
use crate::io::IoError;
use crate::retrieval::RetrievalError;

#[derive(Debug, thiserror::Error)]
pub enum AdaptationError {
    #[error("training split is empty")]
    EmptySplit,
    #[error("k = {k} exceeds the {available} training samples")]
    NotEnoughExamples { k: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid prompt plan: {0}")]
    Plan(String),
    #[error("example {0} is not in the corpus")]
    MissingExample(SampleId),
    #[error(transparent)]
    Sample(#[from] ExerciseError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Io(#[from] IoError),
}
