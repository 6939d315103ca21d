//! Embedding and generation providers.
//!
//! Everything above this module talks to [`Embedder`] and [`Generator`]
//! trait objects. Two implementations ship: deterministic mocks for offline
//! use, and an HTTP client for OpenAI-compatible `/embeddings` and
//! `/chat/completions` endpoints.

mod http;
mod limiter;
mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use limiter::{InFlightLimiter, Permit};
pub use mock::{CallCounter, MockEmbedder, MockGenerator, NO_ENTRIES};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider error: {0}")]
    Provider(String),
    #[error("embedding dimension changed from {expected} to {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    /// Transport failures, 429 and 5xx are worth retrying; nothing else is.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || (500..600).contains(status),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, BackendError>;

pub trait Embedder: Send + Sync {
    /// Stable identifier of the model that produces the vectors. Part of the
    /// embedding cache key.
    fn embedder_id(&self) -> String;

    /// One vector per text, in input order.
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;

    /// Token vectors for BERTScore.
    fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<f32>>> {
        if tokens.is_empty() {
            return Err(BackendError::EmptyInput);
        }
        self.embed_texts(tokens)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
    pub latency_ms: u64,
}

pub trait Generator: Send + Sync {
    fn model_id(&self) -> String;

    fn generate(&self, prompt: &str) -> Result<GenerationResult>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff_ms: 500,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, `attempt` counting from 1.
    pub fn backoff(&self, attempt: u32) -> std::time::Duration {
        let factor = self.multiplier.max(1.0).powi(attempt.saturating_sub(1) as i32);
        std::time::Duration::from_millis((self.initial_backoff_ms as f64 * factor) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub provider: ProviderKind,
    pub base_url: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub embed_model_id: String,
    pub chat_model_id: String,
    /// Vector width of the mock embedder.
    pub mock_dim: usize,
    pub max_in_flight: usize,
    pub timeout_s: u64,
    pub retry: RetryPolicy,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Mock,
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "LRL_API_KEY".into(),
            embed_model_id: "text-embedding-ada-002".into(),
            chat_model_id: "gpt-4o".into(),
            mock_dim: 64,
            max_in_flight: 4,
            timeout_s: 60,
            retry: RetryPolicy::default(),
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight < 1 {
            return Err(BackendError::Config("max_in_flight must be at least 1".into()));
        }
        if self.retry.max_attempts < 1 {
            return Err(BackendError::Config("retry.max_attempts must be at least 1".into()));
        }
        if self.provider == ProviderKind::Mock && self.mock_dim == 0 {
            return Err(BackendError::Config("mock_dim must be positive".into()));
        }
        Ok(())
    }

    /// Build the embedder and generator this configuration describes.
    pub fn build(
        &self,
    ) -> Result<(std::sync::Arc<dyn Embedder>, std::sync::Arc<dyn Generator>)> {
        use std::sync::Arc;
        self.validate()?;
        Ok(match self.provider {
            ProviderKind::Mock => (
                Arc::new(MockEmbedder::new(self.mock_dim)),
                Arc::new(MockGenerator::default()),
            ),
            ProviderKind::Http => {
                let backend = Arc::new(HttpBackend::from_config(self)?);
                (backend.clone(), backend)
            }
        })
    }
}

/// Scale `v` to unit Euclidean norm. `None` for zero or non-finite vectors.
pub fn unit_normalize(v: &[f32]) -> Option<Vec<f32>> {
    let norm = v.iter().map(|x| f64::from(*x) * f64::from(*x)).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| (f64::from(*x) / norm) as f32).collect())
}
