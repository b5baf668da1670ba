use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sandbox::{Sandbox, SandboxJob, TaskStatus};
use super::suite::BenchmarkTask;
use super::EvalError;
use crate::adaptation::{realize_prompt, PromptContext, PromptPlan};
use crate::endpoint::{CompletionEndpoint, CompletionRequest};

/// Cuts a completion at the first top-level line that is not part of a
/// function or class definition (a blank line, comment, `def`, `async def`,
/// `class` or decorator keeps going). Models often continue past the
/// requested function with test calls or a `__main__` block.
pub fn truncate_completion(completion: &str) -> &str {
    let mut offset = 0;
    for line in completion.split_inclusive('\n') {
        let top_level = !line.starts_with([' ', '\t']) && !line.trim().is_empty();
        let allowed = ["def ", "async def ", "class ", "@", "#"];
        if top_level && !allowed.iter().any(|p| line.starts_with(p)) {
            return &completion[..offset];
        }
        offset += line.len();
    }
    completion
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeSettings {
    /// Always 0: greedy decoding.
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub status: TaskStatus,
    pub error_class: Option<String>,
    /// The (truncated) completion that was appended to the task prompt.
    pub generated_code: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub suite_id: String,
    /// Row name in reports, e.g. `baseline`, `rag`, `lora`.
    pub label: String,
    pub strategy: PromptPlan,
    pub per_task: Vec<TaskResult>,
    pub pass_at_1: f64,
    pub mean_similarity: Option<f64>,
    pub decode: DecodeSettings,
}

impl EvalRun {
    pub fn passed(&self) -> usize {
        self.per_task.iter().filter(|t| t.status == TaskStatus::Passed).count()
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub suite_id: String,
    pub label: String,
    /// Per-task sandbox timeout.
    pub timeout: Duration,
    pub max_tokens: u32,
    pub workers: usize,
    pub truncate: bool,
}

impl RunOptions {
    pub fn new(suite_id: impl Into<String>, label: impl Into<String>) -> Self {
        RunOptions {
            suite_id: suite_id.into(),
            label: label.into(),
            timeout: Duration::from_secs(10),
            max_tokens: 512,
            workers: 4,
            truncate: true,
        }
    }
}

/// Prompts the model once per task (greedy), assembles `prompt + completion`
/// and executes it. Per-task failures are recorded, never raised. Results
/// keep suite order regardless of `workers`.
pub fn run_suite(
    tasks: &[BenchmarkTask],
    model: &dyn CompletionEndpoint,
    plan: &PromptPlan,
    ctx: &PromptContext<'_>,
    sandbox: &dyn Sandbox,
    opts: &RunOptions,
) -> Result<EvalRun, EvalError> {
    plan.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let per_task: Vec<TaskResult> =
        pool.install(|| tasks.par_iter().map(|t| run_task(t, model, plan, ctx, sandbox, opts)).collect());
    let pass_at_1 = if per_task.is_empty() {
        0.0
    } else {
        per_task.iter().filter(|t| t.status == TaskStatus::Passed).count() as f64 / per_task.len() as f64
    };
    Ok(EvalRun {
        suite_id: opts.suite_id.clone(),
        label: opts.label.clone(),
        strategy: plan.clone(),
        per_task,
        pass_at_1,
        mean_similarity: None,
        decode: DecodeSettings {
            temperature: 0.0,
            max_tokens: opts.max_tokens,
        },
    })
}

fn run_task(
    task: &BenchmarkTask,
    model: &dyn CompletionEndpoint,
    plan: &PromptPlan,
    ctx: &PromptContext<'_>,
    sandbox: &dyn Sandbox,
    opts: &RunOptions,
) -> TaskResult {
    let fail = |class: &str, generated: String| TaskResult {
        task_id: task.task_id.clone(),
        status: TaskStatus::Error,
        error_class: Some(class.to_string()),
        generated_code: generated,
    };
    let prompt = match realize_prompt(plan, &task.prompt, ctx) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("{}: prompt: {e}", task.task_id);
            return fail("PromptError", String::new());
        }
    };
    let request = CompletionRequest {
        prompt,
        max_tokens: opts.max_tokens,
        temperature: 0.0,
    };
    let completion = match model.complete(&request) {
        Ok(c) => c,
        Err(e) => {
            log::warn!("{}: endpoint: {e}", task.task_id);
            return fail("EndpointError", String::new());
        }
    };
    let generated = if opts.truncate {
        truncate_completion(&completion).to_string()
    } else {
        completion
    };
    let candidate = format!("{}{}", task.prompt, generated);
    let result = sandbox.execute(&SandboxJob::new(task, candidate, opts.timeout));
    TaskResult {
        task_id: task.task_id.clone(),
        status: result.status,
        error_class: result.error_class,
        generated_code: generated,
    }
}
