//! Benchmark execution (Pass@1), embedding similarity and delta reports.
//!
//! A suite run realizes each task's prompt under a [`PromptPlan`], asks the
//! model for one greedy completion, appends it to the task prompt and hands
//! the program to a [`Sandbox`]. [`HarnessSandbox`] speaks a one-line JSON
//! protocol with an external executor; [`ReferenceSandbox`] needs no
//! interpreter and passes a candidate iff it is token-equal to the task's
//! canonical solution.
//!
//! [`PromptPlan`]: crate::adaptation::PromptPlan

mod report;
mod run;
mod sandbox;
mod similarity;
mod suite;

pub use report::{build_report, format_delta, EvalReport, ReportRow, REPORT_SCHEMA_VERSION};
pub use run::{run_suite, truncate_completion, DecodeSettings, EvalRun, RunOptions, TaskResult};
pub use sandbox::{
    HarnessSandbox, ReferenceSandbox, Sandbox, SandboxJob, SandboxResult, TaskStatus, HARNESS_SCHEMA_VERSION,
};
pub use similarity::{similarity_eval, split_similarity, strip_docstrings};
pub use suite::{load_suite, parse_suite, verify_suite, BenchmarkTask};

use crate::adaptation::AdaptationError;
use crate::endpoint::EndpointError;
use crate::io::IoError;
use crate::retrieval::RetrievalError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("suite record {record}: {message}")]
    Schema { record: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("runs come from different suites: `{expected}` and `{found}`")]
    SuiteMismatch { expected: String, found: String },
    #[error("{generated} generated texts but {references} references")]
    LengthMismatch { generated: usize, references: usize },
    #[error(transparent)]
    Plan(#[from] AdaptationError),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Io(#[from] IoError),
}
