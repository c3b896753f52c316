//! Chat-completion client with a content-addressed disk cache, retries,
//! bounded concurrency and first-line response trimming.

mod cache;
mod client;
mod transport;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheEntry, DiskCache};
pub use client::{Completion, LlmClient, RetryPolicy};
pub use transport::{FnTransport, HttpTransport, OfflineTransport, RawResponse, Transport, TransportError};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("prompt exceeds the context window{}: {detail}", limit.map(|l| format!(" of {l} tokens")).unwrap_or_default())]
    ContextLength { limit: Option<usize>, detail: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("gave up after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl LlmError {
    /// Errors that make a whole setting infeasible rather than one item.
    pub fn is_context_length(&self) -> bool {
        matches!(self, LlmError::ContextLength { .. })
    }
}

/// Where and how to reach one chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointProfile {
    pub id: String,
    /// Full URL of the chat-completions route.
    pub url: String,
    /// Environment variable holding the bearer token; none for local
    /// endpoints.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Context window in model tokens, if known.
    #[serde(default)]
    pub context_limit: Option<usize>,
    /// Characters per model token used to estimate prompt length against
    /// `context_limit`.
    #[serde(default = "default_chars_per_token")]
    pub chars_per_token: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_chars_per_token() -> f64 {
    4.0
}

fn default_timeout_secs() -> u64 {
    600
}

impl EndpointProfile {
    pub fn new(id: impl Into<String>, url: impl Into<String>) -> Self {
        EndpointProfile {
            id: id.into(),
            url: url.into(),
            api_key_env: None,
            context_limit: None,
            chars_per_token: default_chars_per_token(),
            timeout_secs: default_timeout_secs(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn api_key(&self) -> Result<Option<String>, LlmError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| LlmError::MissingApiKey(var.clone())),
        }
    }

    /// Rough model-token estimate of `prompt`.
    pub fn estimate_tokens(&self, prompt: &str) -> usize {
        (prompt.chars().count() as f64 / self.chars_per_token).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            model: model.into(),
            prompt: prompt.into(),
            temperature: 0.0,
            max_output_tokens: 1024,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("empty prompt".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} is negative",
                self.temperature
            )));
        }
        if self.model.is_empty() {
            return Err(LlmError::InvalidRequest("empty model name".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 over the request's JSON encoding.
    pub fn cache_key(&self) -> String {
        let json = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// OpenAI-style chat-completions body.
    pub fn wire_body(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": self.prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
        })
    }
}

/// The response up to its first newline, whitespace-trimmed.
pub fn trim_response(raw: &str) -> &str {
    raw.split('\n').next().unwrap_or("").trim()
}
