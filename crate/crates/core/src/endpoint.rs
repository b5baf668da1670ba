//! Model endpoints: the teacher chat contract, the completion contract used
//! for models under evaluation, and the HTTP plumbing with retry/backoff.
//!
//! A URL of the form `mock:<path>` selects a fixture-replaying endpoint
//! instead of HTTP, so pipelines run offline.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exercise::TokenCounts;

pub const MOCK_SCHEME: &str = "mock:";

#[derive(Debug, Clone, thiserror::Error)]
pub enum EndpointError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited (HTTP 429)")]
    RateLimited { retry_after: Option<Duration> },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
    #[error("giving up after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: u32,
        last: Box<EndpointError>,
    },
    #[error("mock endpoint: {0}")]
    Mock(String),
}

impl EndpointError {
    fn is_retryable(&self) -> bool {
        match self {
            EndpointError::Transport(_) | EndpointError::RateLimited { .. } => true,
            EndpointError::Status { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// Exponential backoff: `initial`, doubling per retry, capped at `max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    #[serde(with = "secs_f64")]
    pub initial_backoff: Duration,
    #[serde(with = "secs_f64")]
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            initial_backoff: Duration::from_secs(1),
            max_backoff: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry.min(31));
        self.initial_backoff
            .checked_mul(factor)
            .unwrap_or(self.max_backoff)
            .min(self.max_backoff)
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// retry budget is spent. A rate-limit `Retry-After` longer than the
    /// computed backoff wins (still capped at `max_backoff`).
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, EndpointError>,
    ) -> Result<T, EndpointError> {
        let mut retry = 0;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && retry < self.max_retries => {
                    let mut wait = self.backoff(retry);
                    if let EndpointError::RateLimited {
                        retry_after: Some(after),
                    } = &e
                    {
                        wait = wait.max(*after).min(self.max_backoff);
                    }
                    log::warn!("request failed ({e}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                    retry += 1;
                }
                Err(e) if e.is_retryable() => {
                    return Err(EndpointError::RetriesExhausted {
                        attempts: retry + 1,
                        last: Box::new(e),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }
}

mod secs_f64 {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Connection settings shared by every HTTP endpoint.
#[derive(Clone, Debug)]
pub struct HttpSettings {
    pub base_url: String,
    pub api_key: Option<String>,
    pub request_timeout: Duration,
    pub retry: RetryPolicy,
}

impl HttpSettings {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpSettings {
            base_url: base_url.into(),
            api_key: None,
            request_timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
        }
    }
}

/// Blocking JSON-over-HTTP client.
pub struct HttpClient {
    agent: ureq::Agent,
    settings: HttpSettings,
}

impl HttpClient {
    pub fn new(settings: HttpSettings) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(settings.request_timeout))
            .build();
        HttpClient {
            agent: ureq::Agent::new_with_config(config),
            settings,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}/{}", self.settings.base_url.trim_end_matches('/'), path)
    }

    pub fn post_json(&self, path: &str, body: &Value) -> Result<Value, EndpointError> {
        let url = self.url(path);
        self.settings.retry.run(|| self.post_once(&url, body))
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, EndpointError> {
        let mut req = self.agent.post(url).header("content-type", "application/json");
        if let Some(key) = &self.settings.api_key {
            req = req.header("authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 {
            let retry_after = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<f64>().ok())
                .and_then(|s| Duration::try_from_secs_f64(s).ok());
            return Err(EndpointError::RateLimited { retry_after });
        }
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(EndpointError::Status { status, body });
        }
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| EndpointError::Decode(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChatRequest {
    pub system: Option<String>,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    /// Token usage reported by the endpoint, when it reports any.
    pub usage: Option<TokenCounts>,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>) -> Self {
        ChatResponse {
            content: content.into(),
            usage: None,
        }
    }
}

/// Single-turn chat contract used for the teacher model.
pub trait ChatEndpoint: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError>;
}

impl<F> ChatEndpoint for F
where
    F: Fn(&ChatRequest) -> Result<ChatResponse, EndpointError> + Send + Sync,
{
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        self(request)
    }
}

/// OpenAI-style `POST {base}/chat/completions`.
pub struct HttpChatEndpoint {
    client: HttpClient,
    model: String,
}

impl HttpChatEndpoint {
    pub fn new(settings: HttpSettings, model: impl Into<String>) -> Self {
        HttpChatEndpoint {
            client: HttpClient::new(settings),
            model: model.into(),
        }
    }
}

impl ChatEndpoint for HttpChatEndpoint {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        let mut messages = Vec::new();
        if let Some(system) = &request.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": request.user}));
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let resp = self.client.post_json("chat/completions", &body)?;
        let content = resp
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| EndpointError::Decode("missing choices[0].message.content".into()))?
            .to_string();
        let usage = match (
            resp.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
            resp.pointer("/usage/completion_tokens").and_then(Value::as_u64),
        ) {
            (Some(input), Some(output)) => Some(TokenCounts { input, output }),
            _ => None,
        };
        Ok(ChatResponse { content, usage })
    }
}

/// One canned teacher reply.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChatFixture {
    pub response: String,
    #[serde(default)]
    pub input_tokens: Option<u64>,
    #[serde(default)]
    pub output_tokens: Option<u64>,
}

/// Replays fixtures. The fixture for a request is picked by a hash of the
/// user message, so replies do not depend on request order or concurrency.
pub struct FixtureChatEndpoint {
    fixtures: Vec<ChatFixture>,
}

impl FixtureChatEndpoint {
    pub fn new(fixtures: Vec<ChatFixture>) -> Result<Self, EndpointError> {
        if fixtures.is_empty() {
            return Err(EndpointError::Mock("no fixtures".into()));
        }
        Ok(FixtureChatEndpoint { fixtures })
    }

    /// Loads `*.jsonl` files of [`ChatFixture`] records; any other file is a
    /// single verbatim response.
    pub fn load(path: &Path) -> Result<Self, EndpointError> {
        if path.extension().is_some_and(|e| e == "jsonl") {
            let fixtures = crate::io::read_jsonl(path).map_err(|e| EndpointError::Mock(e.to_string()))?;
            Self::new(fixtures)
        } else {
            let response = std::fs::read_to_string(path)
                .map_err(|e| EndpointError::Mock(format!("{}: {e}", path.display())))?;
            Self::new(vec![ChatFixture {
                response,
                input_tokens: None,
                output_tokens: None,
            }])
        }
    }
}

impl ChatEndpoint for FixtureChatEndpoint {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        let idx = (xxhash_rust::xxh3::xxh3_64(request.user.as_bytes()) % self.fixtures.len() as u64)
            as usize;
        let f = &self.fixtures[idx];
        let usage = match (f.input_tokens, f.output_tokens) {
            (Some(input), Some(output)) => Some(TokenCounts { input, output }),
            _ => None,
        };
        Ok(ChatResponse {
            content: f.response.clone(),
            usage,
        })
    }
}

/// Builds a chat endpoint from a URL: `mock:<path>` replays fixtures,
/// anything else is HTTP.
pub fn chat_endpoint_from_url(
    settings: HttpSettings,
    model: &str,
) -> Result<Box<dyn ChatEndpoint>, EndpointError> {
    match settings.base_url.strip_prefix(MOCK_SCHEME) {
        Some(path) => Ok(Box::new(FixtureChatEndpoint::load(Path::new(path))?)),
        None => Ok(Box::new(HttpChatEndpoint::new(settings, model))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

/// Plain completion contract for models under evaluation:
/// `POST {prompt, max_tokens, temperature}` returning `{text}`.
pub trait CompletionEndpoint: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError>;
}

impl<F> CompletionEndpoint for F
where
    F: Fn(&CompletionRequest) -> Result<String, EndpointError> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        self(request)
    }
}

/// `POST {base}/completions`. Accepts `{"text": ...}` and the OpenAI
/// `{"choices": [{"text": ...}]}` shape.
pub struct HttpCompletionEndpoint {
    client: HttpClient,
    model: String,
}

impl HttpCompletionEndpoint {
    pub fn new(settings: HttpSettings, model: impl Into<String>) -> Self {
        HttpCompletionEndpoint {
            client: HttpClient::new(settings),
            model: model.into(),
        }
    }
}

impl CompletionEndpoint for HttpCompletionEndpoint {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let body = json!({
            "model": self.model,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        let resp = self.client.post_json("completions", &body)?;
        resp.get("text")
            .or_else(|| resp.pointer("/choices/0/text"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| EndpointError::Decode("missing `text`".into()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletionFixture {
    /// The task text the reply belongs to.
    pub prompt: String,
    pub completion: String,
}

/// Replays completions keyed by task text: a request is answered with the
/// fixture whose `prompt` is the longest suffix of the request prompt
/// (realized prompts always end with the task). Unmatched requests get an
/// empty completion.
#[derive(Clone, Debug, Default)]
pub struct FixtureCompletionEndpoint {
    fixtures: Vec<CompletionFixture>,
}

impl FixtureCompletionEndpoint {
    pub fn new(fixtures: Vec<CompletionFixture>) -> Self {
        FixtureCompletionEndpoint { fixtures }
    }

    pub fn load(path: &Path) -> Result<Self, EndpointError> {
        let fixtures = crate::io::read_jsonl(path).map_err(|e| EndpointError::Mock(e.to_string()))?;
        Ok(Self::new(fixtures))
    }
}

impl CompletionEndpoint for FixtureCompletionEndpoint {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        Ok(self
            .fixtures
            .iter()
            .filter(|f| request.prompt.ends_with(&f.prompt))
            .max_by_key(|f| f.prompt.len())
            .map(|f| f.completion.clone())
            .unwrap_or_default())
    }
}

pub fn completion_endpoint_from_url(
    settings: HttpSettings,
    model: &str,
) -> Result<Box<dyn CompletionEndpoint>, EndpointError> {
    match settings.base_url.strip_prefix(MOCK_SCHEME) {
        Some(path) => Ok(Box::new(FixtureCompletionEndpoint::load(Path::new(path))?)),
        None => Ok(Box::new(HttpCompletionEndpoint::new(settings, model))),
    }
}

pub fn mock_path(url: &str) -> Option<PathBuf> {
    url.strip_prefix(MOCK_SCHEME).map(PathBuf::from)
}
