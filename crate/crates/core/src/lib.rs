//! Tooling for adapting small code-generation models to a programming domain.
//!
//! The pipeline has four stages, each a module here:
//!
//! 1. [`generation`] renders exercise prompts over sampled control variables
//!    and asks a teacher chat endpoint for a docstring + code exercise.
//! 2. [`validation`] keeps the samples whose code parses and whose imports and
//!    attribute chains resolve against an [`validation::ApiIndex`].
//! 3. [`dataset`] deduplicates, splits and profiles the validated corpus;
//!    [`retrieval`] and [`adaptation`] turn the training split into few-shot
//!    plans, retrieval-augmented plans and fine-tune export packages.
//! 4. [`evaluation`] runs benchmark suites through a sandbox (Pass@1), scores
//!    embedding similarity and renders delta reports against a baseline.
//!
//! Everything that talks to the network sits behind a trait
//! ([`endpoint::ChatEndpoint`], [`endpoint::CompletionEndpoint`],
//! [`retrieval::Embedder`], [`evaluation::Sandbox`]) with an offline
//! implementation, so the whole pipeline runs deterministically without a
//! model server. See the `examples/` directory for one program per stage.

pub mod adaptation;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod endpoint;
pub mod evaluation;
pub mod exercise;
pub mod generation;
pub mod io;
pub mod retrieval;
pub mod tokenize;
pub mod validation;

pub use exercise::{
    serialize_training_text, ControlVariables, DatasetSplit, Domain, ExerciseSample, Inclusion,
    RejectReason, SampleId, SkillLevel, SplitFractions, TokenCounts, ValidationStatus,
};
pub use tokenize::{ApproxTokenizer, Tokenizer};
