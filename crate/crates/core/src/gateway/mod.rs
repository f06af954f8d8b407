//! Provider-agnostic access to chat completion, vision and embedding models.
//!
//! Two implementations ship with the crate: [`HttpProvider`], which speaks the
//! de-facto `/v1/chat/completions` and `/v1/embeddings` wire format, and
//! [`MockProvider`] / [`HashEmbedder`], deterministic stand-ins used by the
//! offline test suite and by `--mock` runs of the CLI.

mod clock;
mod http;
mod mock;
mod rate_limit;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clock::{Clock, ManualClock, SystemClock};
pub use http::{HttpProvider, ProviderProfile, RetryPolicy};
pub use mock::{uniform_draw, CapturedCall, HashEmbedder, MockProvider, MockReply, StaticEmbedder};
pub use rate_limit::RateLimiter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("rate limit of {requests_per_minute} requests/minute reached")]
    RateLimited { requests_per_minute: u32 },
    #[error("provider rejected the request (status {status}): {message}")]
    ProviderRejection { status: u16, message: String },
    #[error("unsupported image: {0}")]
    UnsupportedImage(String),
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Sampling parameters for one model call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelConfig")]
pub struct ModelConfig {
    model_id: String,
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct RawModelConfig {
    model_id: String,
    temperature: f64,
    max_tokens: u32,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<RawModelConfig> for ModelConfig {
    type Error = GatewayError;

    fn try_from(raw: RawModelConfig) -> Result<Self, Self::Error> {
        ModelConfig::new(raw.model_id, raw.temperature, raw.max_tokens).map(|c| c.with_seed(raw.seed))
    }
}

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

impl ModelConfig {
    pub fn new(
        model_id: impl Into<String>,
        temperature: f64,
        max_tokens: u32,
    ) -> Result<Self, GatewayError> {
        let model_id = model_id.into();
        if model_id.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("model_id is empty".into()));
        }
        if !temperature.is_finite() || !(0.0..=2.0).contains(&temperature) {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature {temperature} outside [0, 2]"
            )));
        }
        if max_tokens == 0 {
            return Err(GatewayError::InvalidConfig("max_tokens must be at least 1".into()));
        }
        Ok(Self {
            model_id,
            temperature,
            max_tokens,
            seed: None,
        })
    }

    /// Profile construction: temperature 0.5, 500 tokens.
    pub fn profile(model_id: impl Into<String>) -> Self {
        Self::new(model_id, 0.5, 500).expect("preset is valid")
    }

    /// Game trials: temperature 1.0, 500 tokens.
    pub fn experiment(model_id: impl Into<String>) -> Self {
        Self::new(model_id, 1.0, 500).expect("preset is valid")
    }

    /// Interactive endowment chat: temperature 0.65, 150 tokens.
    pub fn endowment_chat(model_id: impl Into<String>) -> Self {
        Self::new(model_id, 0.65, 150).expect("preset is valid")
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_temperature(self, temperature: f64) -> Result<Self, GatewayError> {
        Self::new(self.model_id, temperature, self.max_tokens).map(|c| c.with_seed(self.seed))
    }

    pub fn with_max_tokens(self, max_tokens: u32) -> Result<Self, GatewayError> {
        Self::new(self.model_id, self.temperature, max_tokens).map(|c| c.with_seed(self.seed))
    }

    pub fn with_model_id(self, model_id: impl Into<String>) -> Result<Self, GatewayError> {
        Self::new(model_id, self.temperature, self.max_tokens).map(|c| c.with_seed(self.seed))
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn max_tokens(&self) -> u32 {
        self.max_tokens
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageFormat {
    #[serde(rename = "image/png")]
    Png,
    #[serde(rename = "image/jpeg")]
    Jpeg,
}

impl ImageFormat {
    pub fn media_type(self) -> &'static str {
        match self {
            ImageFormat::Png => "image/png",
            ImageFormat::Jpeg => "image/jpeg",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Jpeg => "jpg",
        }
    }
}

/// A decoded-and-verified PNG or JPEG blob.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageAttachment {
    bytes: Vec<u8>,
    format: ImageFormat,
}

impl ImageAttachment {
    /// Accepts the blob only if it fully decodes as PNG or JPEG.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, GatewayError> {
        if bytes.is_empty() {
            return Err(GatewayError::UnsupportedImage("empty blob".into()));
        }
        let format = match image::guess_format(&bytes) {
            Ok(image::ImageFormat::Png) => ImageFormat::Png,
            Ok(image::ImageFormat::Jpeg) => ImageFormat::Jpeg,
            Ok(other) => {
                return Err(GatewayError::UnsupportedImage(format!(
                    "{other:?} is not PNG or JPEG"
                )))
            }
            Err(e) => return Err(GatewayError::UnsupportedImage(e.to_string())),
        };
        image::load_from_memory(&bytes).map_err(|e| GatewayError::UnsupportedImage(e.to_string()))?;
        Ok(Self { bytes, format })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn format(&self) -> ImageFormat {
        self.format
    }

    pub fn data_url(&self) -> String {
        use base64::Engine;
        format!(
            "data:{};base64,{}",
            self.format.media_type(),
            base64::engine::general_purpose::STANDARD.encode(&self.bytes)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    pub images: Vec<ImageAttachment>,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            images: Vec::new(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
            images: Vec::new(),
        }
    }

    pub fn with_images(mut self, images: Vec<ImageAttachment>) -> Self {
        self.images = images;
        self
    }
}

/// A system prompt plus a nonempty, user-first, strictly alternating message list.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    system_prompt: String,
    messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn new(
        system_prompt: impl Into<String>,
        messages: Vec<ChatMessage>,
    ) -> Result<Self, GatewayError> {
        if messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        for (i, m) in messages.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if m.role != expected {
                return Err(GatewayError::InvalidRequest(format!(
                    "message {i} has role {}, expected {}",
                    m.role.as_str(),
                    expected.as_str()
                )));
            }
        }
        Ok(Self {
            system_prompt: system_prompt.into(),
            messages,
        })
    }

    /// Single-turn request.
    pub fn single(system_prompt: impl Into<String>, user: impl Into<String>) -> Self {
        Self::new(system_prompt, vec![ChatMessage::user(user)]).expect("single user turn is valid")
    }

    pub fn system_prompt(&self) -> &str {
        &self.system_prompt
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn last_user_text(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or_default()
    }

    pub fn has_images(&self) -> bool {
        self.messages.iter().any(|m| !m.images.is_empty())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub usage: TokenUsage,
    pub latency: Duration,
    pub attempts: u32,
}

/// Fixed-dimension embedding with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, GatewayError> {
        if values.is_empty() {
            return Err(GatewayError::InvalidRequest("embedding has dimension 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GatewayError::InvalidRequest("embedding has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

#[async_trait]
pub trait ChatModel: Send + Sync {
    async fn complete_chat(
        &self,
        request: &ChatRequest,
        config: &ModelConfig,
    ) -> Result<ChatResponse, GatewayError>;

    /// Whether image attachments can be sent as-is.
    fn accepts_images(&self) -> bool {
        false
    }
}

#[async_trait]
pub trait Embedder: Send + Sync {
    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError>;
}

/// Embeds `texts`, checking one vector per input and a single shared dimension.
pub async fn embed_texts(
    embedder: &dyn Embedder,
    texts: &[String],
) -> Result<Vec<EmbeddingVector>, GatewayError> {
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(GatewayError::InvalidRequest(format!("text {i} is empty")));
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let vectors = embedder.embed_batch(texts).await?;
    if vectors.len() != texts.len() {
        return Err(GatewayError::InvalidRequest(format!(
            "provider returned {} embeddings for {} inputs",
            vectors.len(),
            texts.len()
        )));
    }
    let expected = vectors[0].dimension();
    if let Some(v) = vectors.iter().find(|v| v.dimension() != expected) {
        return Err(GatewayError::DimensionMismatch {
            expected,
            actual: v.dimension(),
        });
    }
    Ok(vectors)
}

pub const DEFAULT_DESCRIBE_INSTRUCTION: &str =
    "Describe the item shown in this image in one or two sentences, naming what it is.";

/// Image-to-text: sends one image with an instruction and returns the model's description.
pub async fn describe_image(
    model: &dyn ChatModel,
    image: &[u8],
    instruction: &str,
    config: &ModelConfig,
) -> Result<String, GatewayError> {
    let attachment = ImageAttachment::from_bytes(image.to_vec())?;
    if instruction.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("instruction is empty".into()));
    }
    let request = ChatRequest::new(
        "",
        vec![ChatMessage::user(instruction).with_images(vec![attachment])],
    )?;
    Ok(model.complete_chat(&request, config).await?.text)
}
