use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::cost::{CostSummary, RequestLogEntry};
use super::parse::parse_response;
use super::template::render_prompt;
use crate::endpoint::{
    chat_endpoint_from_url, ChatEndpoint, ChatRequest, EndpointError, HttpSettings, RetryPolicy,
};
use crate::exercise::{ControlVariables, Domain, ExerciseSample, TokenCounts};
use crate::tokenize::Tokenizer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeacherEndpointConfig {
    /// HTTP base URL, or `mock:<fixture path>`.
    pub base_url: String,
    pub model_id: String,
    pub max_output_tokens: u32,
    pub request_timeout_secs: f64,
    pub max_retries: u32,
    pub temperature: f64,
    pub system_prompt: Option<String>,
    #[serde(skip)]
    pub api_key: Option<String>,
    /// Concurrent requests in [`generate_batch`].
    pub concurrency: usize,
}

impl Default for TeacherEndpointConfig {
    fn default() -> Self {
        Self::new("https://api.openai.com/v1", "gpt-4o")
    }
}

impl TeacherEndpointConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        TeacherEndpointConfig {
            base_url: base_url.into(),
            model_id: model_id.into(),
            max_output_tokens: 1500,
            request_timeout_secs: 120.0,
            max_retries: 5,
            temperature: 0.7,
            system_prompt: None,
            api_key: None,
            concurrency: 4,
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.max_output_tokens == 0 {
            return Err(GenerationError::Config("max_output_tokens must be > 0".into()));
        }
        if self.concurrency == 0 {
            return Err(GenerationError::Config("concurrency must be > 0".into()));
        }
        if self.request_timeout_secs.is_nan() || self.request_timeout_secs <= 0.0 {
            return Err(GenerationError::Config("request timeout must be > 0".into()));
        }
        Ok(())
    }

    pub fn http_settings(&self) -> HttpSettings {
        HttpSettings {
            base_url: self.base_url.clone(),
            api_key: self.api_key.clone(),
            request_timeout: Duration::from_secs_f64(self.request_timeout_secs),
            retry: RetryPolicy {
                max_retries: self.max_retries,
                ..RetryPolicy::default()
            },
        }
    }

    pub fn connect(&self) -> Result<Box<dyn ChatEndpoint>, GenerationError> {
        self.validate()?;
        Ok(chat_endpoint_from_url(self.http_settings(), &self.model_id)?)
    }

    fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest {
            system: self.system_prompt.clone(),
            user: prompt,
            temperature: self.temperature,
            max_tokens: self.max_output_tokens,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("teacher configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
}

/// One teacher round trip. The returned sample is `unvalidated`, or
/// `rejected` when the reply could not be split into docstring + code; it is
/// never `valid`.
pub fn generate_sample(
    teacher: &dyn ChatEndpoint,
    config: &TeacherEndpointConfig,
    domain: &Domain,
    cv: &ControlVariables,
    tokenizer: &dyn Tokenizer,
) -> Result<(ExerciseSample, RequestLogEntry), GenerationError> {
    let prompt = render_prompt(cv);
    let request = config.request(prompt);
    let started = Instant::now();
    let response = teacher.chat(&request)?;
    let wall_seconds = started.elapsed().as_secs_f64();

    let (tokens, reported_usage) = match response.usage {
        Some(u) => (u, true),
        None => (
            TokenCounts {
                input: tokenizer.count(&request.user) as u64,
                output: tokenizer.count(&response.content) as u64,
            },
            false,
        ),
    };
    let sample = match parse_response(&response.content) {
        Ok(parsed) => ExerciseSample::new(
            domain.clone(),
            cv.clone(),
            &parsed.problem_statement,
            &parsed.code,
            response.content,
            tokens,
        ),
        Err(reason) => {
            ExerciseSample::unparsed(domain.clone(), cv.clone(), response.content, tokens, reason)
        }
    };
    let log = RequestLogEntry {
        sample_id: sample.id.clone(),
        input_tokens: tokens.input,
        output_tokens: tokens.output,
        wall_seconds,
        reported_usage,
    };
    Ok((sample, log))
}

#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub cost: CostSummary,
    pub generated: usize,
    /// Request index and error for every request that failed after retries.
    pub failures: Vec<(usize, GenerationError)>,
}

/// Generates one sample per control-variable tuple with up to
/// `config.concurrency` requests in flight. `sink` is called on the calling
/// thread, in input order, so output files are identical across runs with a
/// deterministic teacher.
pub fn generate_batch(
    teacher: &dyn ChatEndpoint,
    config: &TeacherEndpointConfig,
    domain: &Domain,
    cvs: &[ControlVariables],
    tokenizer: &dyn Tokenizer,
    mut sink: impl FnMut(ExerciseSample, RequestLogEntry),
) -> Result<BatchOutcome, GenerationError> {
    config.validate()?;
    let mut outcome = BatchOutcome::default();
    if cvs.is_empty() {
        return Ok(outcome);
    }
    let next = AtomicUsize::new(0);
    let workers = config.concurrency.min(cvs.len());
    let (tx, rx) = mpsc::channel();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= cvs.len() {
                    break;
                }
                let result = generate_sample(teacher, config, domain, &cvs[idx], tokenizer);
                if tx.send((idx, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut emit_from = 0;
        for (idx, result) in rx {
            pending.insert(idx, result);
            while let Some(result) = pending.remove(&emit_from) {
                match result {
                    Ok((sample, log)) => {
                        outcome.cost.add(&log);
                        outcome.generated += 1;
                        sink(sample, log);
                    }
                    Err(e) => {
                        log::error!("request {emit_from} failed: {e}");
                        outcome.failures.push((emit_from, e));
                    }
                }
                emit_from += 1;
            }
        }
    });
    Ok(outcome)
}
