use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use url::Url;

use super::{
    ChatModel, ChatRequest, ChatResponse, Clock, Embedder, EmbeddingVector, GatewayError,
    ModelConfig, RateLimiter, SystemClock, TokenUsage,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Exponential delay before attempt `attempt + 1`, without jitter.
    pub fn base_delay(&self, attempt: u32) -> Duration {
        self.backoff_base * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Where and how to reach one hosted model endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub endpoint: Url,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub requests_per_minute: u32,
    pub retry: RetryPolicy,
    /// Block until the rate limiter frees a slot instead of failing with `RateLimited`.
    pub wait_for_rate_limit: bool,
    #[serde(with = "millis")]
    pub request_timeout: Duration,
    pub embedding_model: String,
    pub accepts_images: bool,
}

impl ProviderProfile {
    pub fn new(endpoint: Url) -> Self {
        Self {
            endpoint,
            api_key_env: Some("OPENAI_API_KEY".into()),
            requests_per_minute: 60,
            retry: RetryPolicy::default(),
            wait_for_rate_limit: true,
            request_timeout: Duration::from_secs(60),
            embedding_model: "BAAI/bge-small-en-v1.5".into(),
            accepts_images: false,
        }
    }

    fn api_url(&self, path: &str) -> String {
        let base = self.endpoint.as_str().trim_end_matches('/');
        let base = base.strip_suffix("/v1").unwrap_or(base);
        format!("{base}/v1/{path}")
    }
}

enum AttemptError {
    Retry(String),
    Fatal(GatewayError),
}

/// Client for chat-completions compatible HTTP endpoints.
pub struct HttpProvider {
    profile: ProviderProfile,
    client: reqwest::Client,
    limiter: Arc<RateLimiter>,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider")
            .field("endpoint", &self.profile.endpoint.as_str())
            .field("requests_per_minute", &self.profile.requests_per_minute)
            .finish()
    }
}

impl HttpProvider {
    pub fn new(profile: ProviderProfile) -> Result<Self, GatewayError> {
        Self::with_clock(profile, Arc::new(SystemClock::default()))
    }

    pub fn with_clock(profile: ProviderProfile, clock: Arc<dyn Clock>) -> Result<Self, GatewayError> {
        if profile.requests_per_minute == 0 {
            return Err(GatewayError::InvalidConfig("requests_per_minute must be positive".into()));
        }
        if profile.retry.max_attempts == 0 {
            return Err(GatewayError::InvalidConfig("max_attempts must be positive".into()));
        }
        let client = reqwest::Client::builder()
            .timeout(profile.request_timeout)
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        let limiter = Arc::new(RateLimiter::new(profile.requests_per_minute, clock));
        Ok(Self {
            profile,
            client,
            limiter,
        })
    }

    pub fn profile(&self) -> &ProviderProfile {
        &self.profile
    }

    fn clock(&self) -> &Arc<dyn Clock> {
        self.limiter.clock()
    }

    fn api_key(&self) -> Option<String> {
        self.profile
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty())
    }

    /// POSTs `body` with rate limiting and retries; returns the parsed JSON and attempt count.
    async fn post_json(&self, path: &str, body: &Value) -> Result<(Value, u32), GatewayError> {
        let url = self.profile.api_url(path);
        let retry = &self.profile.retry;
        let mut last_error = String::new();
        for attempt in 1..=retry.max_attempts {
            self.limiter.acquire(self.profile.wait_for_rate_limit).await?;
            match self.send_once(&url, body).await {
                Ok(value) => return Ok((value, attempt)),
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retry(message)) => {
                    tracing::debug!(attempt, %message, "retriable provider failure");
                    last_error = message;
                    if attempt < retry.max_attempts {
                        let base = retry.base_delay(attempt);
                        let jitter_ms = rand::thread_rng()
                            .gen_range(0..=(retry.backoff_base.as_millis() as u64 / 2).max(1));
                        self.clock().sleep(base + Duration::from_millis(jitter_ms)).await;
                    }
                }
            }
        }
        Err(GatewayError::Transport {
            attempts: retry.max_attempts,
            message: last_error,
        })
    }

    async fn send_once(&self, url: &str, body: &Value) -> Result<Value, AttemptError> {
        let mut request = self.client.post(url).json(body);
        if let Some(key) = self.api_key() {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .await
            .map_err(|e| AttemptError::Retry(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .await
            .map_err(|e| AttemptError::Retry(e.to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(AttemptError::Retry(format!("status {status}: {text}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(GatewayError::ProviderRejection {
                status: status.as_u16(),
                message: text,
            }));
        }
        serde_json::from_str(&text).map_err(|e| {
            AttemptError::Fatal(GatewayError::ProviderRejection {
                status: status.as_u16(),
                message: format!("malformed response body: {e}"),
            })
        })
    }
}

/// Chat-completions request body for `request` under `config`.
pub(crate) fn chat_body(request: &ChatRequest, config: &ModelConfig) -> Value {
    let mut messages = Vec::with_capacity(request.messages().len() + 1);
    if !request.system_prompt().is_empty() {
        messages.push(json!({"role": "system", "content": request.system_prompt()}));
    }
    for m in request.messages() {
        let content = if m.images.is_empty() {
            json!(m.content)
        } else {
            let mut parts = vec![json!({"type": "text", "text": m.content})];
            parts.extend(m.images.iter().map(|img| {
                json!({"type": "image_url", "image_url": {"url": img.data_url()}})
            }));
            Value::Array(parts)
        };
        messages.push(json!({"role": m.role.as_str(), "content": content}));
    }
    let mut body = json!({
        "model": config.model_id(),
        "messages": messages,
        "temperature": config.temperature(),
        "max_tokens": config.max_tokens(),
    });
    if let Some(seed) = config.seed() {
        body["seed"] = json!(seed);
    }
    body
}

fn malformed(what: &str) -> GatewayError {
    GatewayError::ProviderRejection {
        status: 200,
        message: format!("response missing {what}"),
    }
}

#[async_trait]
impl ChatModel for HttpProvider {
    async fn complete_chat(
        &self,
        request: &ChatRequest,
        config: &ModelConfig,
    ) -> Result<ChatResponse, GatewayError> {
        if request.has_images() && !self.profile.accepts_images {
            return Err(GatewayError::InvalidRequest(
                "provider is configured as text-only".into(),
            ));
        }
        let started = self.clock().now();
        let (value, attempts) = self.post_json("chat/completions", &chat_body(request, config)).await?;
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed("choices[0].message.content"))?
            .to_string();
        let usage = TokenUsage {
            prompt_tokens: value.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            completion_tokens: value
                .pointer("/usage/completion_tokens")
                .and_then(Value::as_u64)
                .unwrap_or(0),
        };
        Ok(ChatResponse {
            text,
            usage,
            latency: self.clock().now().saturating_sub(started),
            attempts,
        })
    }

    fn accepts_images(&self) -> bool {
        self.profile.accepts_images
    }
}

#[async_trait]
impl Embedder for HttpProvider {
    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        let body = json!({"model": self.profile.embedding_model, "input": texts});
        let (value, _) = self.post_json("embeddings", &body).await?;
        let data = value
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("data"))?;
        let mut indexed = Vec::with_capacity(data.len());
        for (pos, item) in data.iter().enumerate() {
            let index = item.get("index").and_then(Value::as_u64).unwrap_or(pos as u64);
            let values = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed("data[].embedding"))?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| malformed("numeric embedding")))
                .collect::<Result<Vec<_>, _>>()?;
            indexed.push((index, EmbeddingVector::new(values)?));
        }
        indexed.sort_by_key(|(i, _)| *i);
        Ok(indexed.into_iter().map(|(_, v)| v).collect())
    }
}
