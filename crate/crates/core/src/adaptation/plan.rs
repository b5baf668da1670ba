use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AdaptationError;
use crate::exercise::{ExerciseSample, SampleId};
use crate::retrieval::{assemble_prompt, query_text, Embedder, RetrievalConfig, VectorStore};
use crate::tokenize::Tokenizer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Strategy {
    Baseline,
    FewShot,
    Rag,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Baseline => "baseline",
            Strategy::FewShot => "few_shot",
            Strategy::Rag => "rag",
        })
    }
}

/// Where a retrieval plan's vectors live.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreRef {
    pub path: String,
    pub embedder: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptPlan {
    pub strategy: Strategy,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Frozen few-shot examples, in prompt order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example_ids: Option<Vec<SampleId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_ref: Option<StoreRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PromptPlan {
    pub fn baseline() -> Self {
        PromptPlan {
            strategy: Strategy::Baseline,
            k: 0,
            threshold: None,
            example_ids: None,
            store_ref: None,
            seed: None,
        }
    }

    pub fn check(&self) -> Result<(), AdaptationError> {
        let bad = |m: &str| Err(AdaptationError::Plan(m.to_string()));
        match self.strategy {
            Strategy::Baseline if self.k != 0 => bad("baseline plans have k = 0"),
            Strategy::FewShot => match &self.example_ids {
                Some(ids) if ids.len() == self.k => Ok(()),
                _ => bad("few_shot plans freeze exactly k example ids"),
            },
            Strategy::Rag if self.threshold.is_none() => bad("rag plans need a threshold"),
            _ => Ok(()),
        }
    }
}

/// Few-shot plans draw `k` ids from the training split: ids are sorted,
/// shuffled with `seed` and the first `k` kept, so the choice depends only on
/// the seed and the split's contents. Retrieval plans record the store and
/// `(k, threshold)`.
pub fn build_prompt_plan(
    strategy: Strategy,
    training_split: &[SampleId],
    retrieval: &RetrievalConfig,
    seed: u64,
    store_ref: Option<StoreRef>,
) -> Result<PromptPlan, AdaptationError> {
    if strategy != Strategy::Baseline && retrieval.k > training_split.len() {
        return Err(AdaptationError::NotEnoughExamples {
            k: retrieval.k,
            available: training_split.len(),
        });
    }
    let plan = match strategy {
        Strategy::Baseline => PromptPlan::baseline(),
        Strategy::FewShot => {
            let mut ids = training_split.to_vec();
            ids.sort();
            ids.dedup();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            ids.truncate(retrieval.k);
            PromptPlan {
                strategy,
                k: retrieval.k,
                threshold: None,
                example_ids: Some(ids),
                store_ref: None,
                seed: Some(seed),
            }
        }
        Strategy::Rag => PromptPlan {
            strategy,
            k: retrieval.k,
            threshold: Some(retrieval.threshold),
            example_ids: None,
            store_ref: Some(store_ref.ok_or_else(|| AdaptationError::Plan("rag plans need a vector store".into()))?),
            seed: None,
        },
    };
    plan.check()?;
    Ok(plan)
}

/// What [`realize_prompt`] needs besides the plan.
pub struct PromptContext<'a> {
    pub samples: HashMap<&'a SampleId, &'a ExerciseSample>,
    pub store: Option<&'a VectorStore>,
    pub embedder: Option<&'a dyn Embedder>,
    pub tokenizer: &'a dyn Tokenizer,
    /// Prompt budget in tokenizer tokens.
    pub budget: usize,
}

impl<'a> PromptContext<'a> {
    pub fn new(samples: &'a [ExerciseSample], tokenizer: &'a dyn Tokenizer, budget: usize) -> Self {
        PromptContext {
            samples: samples.iter().map(|s| (&s.id, s)).collect(),
            store: None,
            embedder: None,
            tokenizer,
            budget,
        }
    }

    pub fn with_retrieval(mut self, store: &'a VectorStore, embedder: &'a dyn Embedder) -> Self {
        self.store = Some(store);
        self.embedder = Some(embedder);
        self
    }

    fn lookup(&self, id: &SampleId) -> Result<&'a ExerciseSample, AdaptationError> {
        self.samples
            .get(id)
            .copied()
            .ok_or_else(|| AdaptationError::MissingExample(id.clone()))
    }
}

/// The prompt sent to the model for `task` under `plan`.
pub fn realize_prompt(plan: &PromptPlan, task: &str, ctx: &PromptContext<'_>) -> Result<String, AdaptationError> {
    let examples: Vec<&ExerciseSample> = match plan.strategy {
        Strategy::Baseline => return Ok(task.to_string()),
        Strategy::FewShot => plan
            .example_ids
            .iter()
            .flatten()
            .map(|id| ctx.lookup(id))
            .collect::<Result<_, _>>()?,
        Strategy::Rag => {
            let (Some(store), Some(embedder)) = (ctx.store, ctx.embedder) else {
                return Err(AdaptationError::Plan("rag prompt needs a store and an embedder".into()));
            };
            if store.is_empty() || plan.k == 0 {
                Vec::new()
            } else {
                let query = embedder
                    .embed(&[query_text(task)])?
                    .pop()
                    .ok_or_else(|| AdaptationError::Plan("embedder returned no vector".into()))?;
                let cfg = RetrievalConfig {
                    k: plan.k,
                    threshold: plan.threshold.unwrap_or(-1.0),
                };
                store
                    .query_top_k(&query, &cfg)?
                    .iter()
                    .map(|hit| ctx.lookup(&hit.id))
                    .collect::<Result<_, _>>()?
            }
        }
    };
    Ok(assemble_prompt(task, &examples, ctx.budget, ctx.tokenizer)?)
}
