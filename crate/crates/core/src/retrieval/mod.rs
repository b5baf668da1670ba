//! Embeddings, an exact cosine vector store, and prompt assembly for the
//! few-shot and retrieval-augmented strategies.
//!
//! Samples are embedded by problem statement and tasks by their docstring
//! (see [`query_text`]), so both sides of a query are natural-language task
//! descriptions. [`HashingEmbedder`] is a deterministic offline stand-in for
//! a sentence-embedding endpoint.

mod embed;
mod prompt;
mod store;

pub use embed::{cosine, Embedder, EmbeddingConfig, EmbeddingVector, HashingEmbedder, HttpEmbedder, DEFAULT_DIMENSION};
pub use prompt::{assemble_prompt, query_text, EXAMPLE_HEADER};
pub use store::{store_paths, Hit, RetrievalConfig, VectorStore, STORE_SCHEMA_VERSION};

use crate::endpoint::EndpointError;
use crate::exercise::ExerciseError;
use crate::io::IoError;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("embedding contains a non-finite component")]
    NonFinite,
    #[error("stored vectors need a source sample id")]
    MissingSourceId,
    #[error("task alone needs {needed} tokens, over the budget of {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("embedding endpoint: {0}")]
    Endpoint(#[from] EndpointError),
    #[error("embedding response: {0}")]
    Response(String),
    #[error("vector store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Example(#[from] ExerciseError),
}
