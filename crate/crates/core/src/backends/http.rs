use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{
    BackendConfig, BackendError, Embedder, GenerationResult, Generator, InFlightLimiter, Result,
    RetryPolicy,
};

/// Client for OpenAI-compatible embedding and chat-completion endpoints.
///
/// Requests are bounded by an internal [`InFlightLimiter`] and retried on
/// transport errors, 429 and 5xx. No sampling parameters are sent; the
/// provider's defaults apply.
pub struct HttpBackend {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
    embed_model: String,
    chat_model: String,
    retry: RetryPolicy,
    limiter: InFlightLimiter,
    dim: OnceLock<usize>,
}

impl HttpBackend {
    pub fn from_config(config: &BackendConfig) -> Result<Self> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!(
                "environment variable {} is not set; sending requests without a bearer token",
                config.api_key_env
            );
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_s.max(1)))
            .build();
        Ok(Self {
            agent,
            base_url: config.base_url.trim_end_matches('/').to_owned(),
            api_key,
            embed_model: config.embed_model_id.clone(),
            chat_model: config.chat_model_id.clone(),
            retry: config.retry.clone(),
            limiter: InFlightLimiter::new(config.max_in_flight),
            dim: OnceLock::new(),
        })
    }

    pub fn limiter(&self) -> &InFlightLimiter {
        &self.limiter
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let url = format!("{}/{}", self.base_url, path);
        let mut attempt = 1;
        loop {
            let outcome = {
                let _permit = self.limiter.acquire();
                self.send_once(&url, body)
            };
            match outcome {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.retry.max_attempts => {
                    log::debug!("{url}: attempt {attempt} failed ({e}), retrying");
                    std::thread::sleep(self.retry.backoff(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn send_once(&self, url: &str, body: &Value) -> Result<Value> {
        let mut req = self.agent.post(url);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let value: Value = match req.send_json(body) {
            Ok(resp) => resp
                .into_json()
                .map_err(|e| BackendError::Provider(format!("invalid JSON response: {e}")))?,
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                return Err(BackendError::Status { status, body });
            }
            Err(ureq::Error::Transport(t)) => return Err(BackendError::Transport(t.to_string())),
        };
        if let Some(err) = value.get("error").filter(|e| !e.is_null()) {
            let msg = err
                .get("message")
                .and_then(Value::as_str)
                .map(str::to_owned)
                .unwrap_or_else(|| err.to_string());
            return Err(BackendError::Provider(msg));
        }
        Ok(value)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        let expected = *self.dim.get_or_init(|| got);
        if expected != got {
            return Err(BackendError::DimensionMismatch { expected, got });
        }
        Ok(())
    }
}

fn parse_embeddings(value: &Value, expected: usize) -> Result<Vec<Vec<f32>>> {
    let data = value
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| BackendError::Provider("response has no `data` array".into()))?;
    let mut rows: Vec<(usize, Vec<f32>)> = Vec::with_capacity(data.len());
    for (pos, item) in data.iter().enumerate() {
        let index = item
            .get("index")
            .and_then(Value::as_u64)
            .map_or(pos, |i| i as usize);
        let vector = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::Provider(format!("data[{pos}] has no embedding")))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .map(|f| f as f32)
                    .ok_or_else(|| BackendError::Provider("non-numeric embedding value".into()))
            })
            .collect::<Result<Vec<f32>>>()?;
        rows.push((index, vector));
    }
    if rows.len() != expected {
        return Err(BackendError::Provider(format!(
            "expected {expected} embeddings, got {}",
            rows.len()
        )));
    }
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

impl Embedder for HttpBackend {
    fn embedder_id(&self) -> String {
        format!("openai:{}", self.embed_model)
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        if texts.is_empty() {
            return Err(BackendError::EmptyInput);
        }
        let body = json!({ "model": self.embed_model, "input": texts });
        let vectors = parse_embeddings(&self.post("embeddings", &body)?, texts.len())?;
        for v in &vectors {
            self.check_dim(v.len())?;
        }
        Ok(vectors)
    }
}

impl Generator for HttpBackend {
    fn model_id(&self) -> String {
        self.chat_model.clone()
    }

    fn generate(&self, prompt: &str) -> Result<GenerationResult> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyInput);
        }
        let body = json!({
            "model": self.chat_model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let started = Instant::now();
        let value = self.post("chat/completions", &body)?;
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Provider("response has no choices[0].message.content".into()))?;
        let usage = |key: &str| value.pointer(&format!("/usage/{key}")).and_then(Value::as_u64);
        Ok(GenerationResult {
            text: text.trim_end().to_owned(),
            model_id: value
                .get("model")
                .and_then(Value::as_str)
                .unwrap_or(&self.chat_model)
                .to_owned(),
            prompt_tokens: usage("prompt_tokens"),
            completion_tokens: usage("completion_tokens"),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
