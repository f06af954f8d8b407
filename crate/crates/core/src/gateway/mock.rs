use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use sha2::{Digest, Sha256};

use super::{
    ChatModel, ChatRequest, ChatResponse, Embedder, EmbeddingVector, GatewayError, ModelConfig,
    TokenUsage,
};

#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Text(String),
    Error(GatewayError),
}

impl From<&str> for MockReply {
    fn from(s: &str) -> Self {
        MockReply::Text(s.to_string())
    }
}

impl From<String> for MockReply {
    fn from(s: String) -> Self {
        MockReply::Text(s)
    }
}

type Responder = Arc<dyn Fn(&ChatRequest, &ModelConfig) -> MockReply + Send + Sync>;

enum Matcher {
    LastUserContains(String),
    LastUserRegex(Regex),
    SystemContains(String),
    CarriesImage(String),
    CarriesAnyImage,
}

impl Matcher {
    fn matches(&self, request: &ChatRequest) -> bool {
        match self {
            Matcher::LastUserContains(s) => request.last_user_text().contains(s.as_str()),
            Matcher::LastUserRegex(re) => re.is_match(request.last_user_text()),
            Matcher::SystemContains(s) => request.system_prompt().contains(s.as_str()),
            Matcher::CarriesImage(digest) => request
                .messages()
                .iter()
                .flat_map(|m| &m.images)
                .any(|img| &digest_hex(img.bytes()) == digest),
            Matcher::CarriesAnyImage => request.has_images(),
        }
    }
}

enum Action {
    Respond(Responder),
    /// Replies consumed in order per matching call; the last one repeats.
    Script {
        replies: Vec<MockReply>,
        cursor: Mutex<usize>,
    },
}

struct Rule {
    matcher: Matcher,
    action: Action,
}

/// One request observed by the mock.
#[derive(Debug, Clone)]
pub struct CapturedCall {
    pub request: ChatRequest,
    pub config: ModelConfig,
}

/// Scriptable offline chat model.
///
/// Rules are tried in insertion order; the first match answers. Content-keyed
/// rules make replies independent of arrival order, so concurrent sweeps stay
/// deterministic. A request carrying images that no image rule expects is
/// rejected.
#[derive(Default)]
pub struct MockProvider {
    rules: Vec<Rule>,
    fallback: Option<Responder>,
    accepts_images: bool,
    captured: Mutex<Vec<CapturedCall>>,
}

impl std::fmt::Debug for MockProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockProvider")
            .field("rules", &self.rules.len())
            .field("accepts_images", &self.accepts_images)
            .finish()
    }
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Answers every request with `text`.
    pub fn always(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new().fallback(move |_, _| MockReply::Text(text.clone()))
    }

    pub fn accepting_images(mut self, accepts: bool) -> Self {
        self.accepts_images = accepts;
        self
    }

    pub fn reply_when(mut self, last_user_contains: &str, reply: impl Into<MockReply>) -> Self {
        let reply = reply.into();
        self.rules.push(Rule {
            matcher: Matcher::LastUserContains(last_user_contains.to_string()),
            action: Action::Respond(Arc::new(move |_, _| reply.clone())),
        });
        self
    }

    pub fn reply_when_regex(mut self, pattern: &str, reply: impl Into<MockReply>) -> Self {
        let reply = reply.into();
        self.rules.push(Rule {
            matcher: Matcher::LastUserRegex(Regex::new(pattern).expect("valid mock pattern")),
            action: Action::Respond(Arc::new(move |_, _| reply.clone())),
        });
        self
    }

    pub fn reply_when_system(mut self, system_contains: &str, reply: impl Into<MockReply>) -> Self {
        let reply = reply.into();
        self.rules.push(Rule {
            matcher: Matcher::SystemContains(system_contains.to_string()),
            action: Action::Respond(Arc::new(move |_, _| reply.clone())),
        });
        self
    }

    pub fn script(mut self, last_user_contains: &str, replies: Vec<MockReply>) -> Self {
        assert!(!replies.is_empty(), "script needs at least one reply");
        self.rules.push(Rule {
            matcher: Matcher::LastUserContains(last_user_contains.to_string()),
            action: Action::Script {
                replies,
                cursor: Mutex::new(0),
            },
        });
        self
    }

    /// Answers requests that carry exactly `image` (by content digest).
    pub fn expect_image(mut self, image: &[u8], reply: impl Into<MockReply>) -> Self {
        let reply = reply.into();
        self.accepts_images = true;
        self.rules.push(Rule {
            matcher: Matcher::CarriesImage(digest_hex(image)),
            action: Action::Respond(Arc::new(move |_, _| reply.clone())),
        });
        self
    }

    /// Answers any request that carries an image.
    pub fn reply_to_any_image(mut self, reply: impl Into<MockReply>) -> Self {
        let reply = reply.into();
        self.rules.push(Rule {
            matcher: Matcher::CarriesAnyImage,
            action: Action::Respond(Arc::new(move |_, _| reply.clone())),
        });
        self
    }

    pub fn fallback<F>(mut self, f: F) -> Self
    where
        F: Fn(&ChatRequest, &ModelConfig) -> MockReply + Send + Sync + 'static,
    {
        self.fallback = Some(Arc::new(f));
        self
    }

    pub fn captured(&self) -> Vec<CapturedCall> {
        self.captured.lock().unwrap().clone()
    }

    fn answer(&self, request: &ChatRequest, config: &ModelConfig) -> MockReply {
        let image_rules: Vec<&Rule> = self
            .rules
            .iter()
            .filter(|r| matches!(r.matcher, Matcher::CarriesImage(_) | Matcher::CarriesAnyImage))
            .collect();
        if request.has_images() && !image_rules.iter().any(|r| r.matcher.matches(request)) {
            return MockReply::Error(GatewayError::ProviderRejection {
                status: 400,
                message: "mock received an image it was not configured to expect".into(),
            });
        }
        for rule in &self.rules {
            if !rule.matcher.matches(request) {
                continue;
            }
            return match &rule.action {
                Action::Respond(f) => f(request, config),
                Action::Script { replies, cursor } => {
                    let mut cursor = cursor.lock().unwrap();
                    let reply = replies[(*cursor).min(replies.len() - 1)].clone();
                    *cursor += 1;
                    reply
                }
            };
        }
        match &self.fallback {
            Some(f) => f(request, config),
            None => MockReply::Error(GatewayError::ProviderRejection {
                status: 404,
                message: "no mock rule matched the request".into(),
            }),
        }
    }
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

#[async_trait]
impl ChatModel for MockProvider {
    async fn complete_chat(
        &self,
        request: &ChatRequest,
        config: &ModelConfig,
    ) -> Result<ChatResponse, GatewayError> {
        if request.has_images() && !self.accepts_images {
            return Err(GatewayError::InvalidRequest(
                "provider is configured as text-only".into(),
            ));
        }
        self.captured.lock().unwrap().push(CapturedCall {
            request: request.clone(),
            config: config.clone(),
        });
        match self.answer(request, config) {
            MockReply::Text(text) => {
                let prompt_tokens = word_count(request.system_prompt())
                    + request.messages().iter().map(|m| word_count(&m.content)).sum::<u64>();
                Ok(ChatResponse {
                    usage: TokenUsage {
                        prompt_tokens,
                        completion_tokens: word_count(&text),
                    },
                    text,
                    latency: Duration::ZERO,
                    attempts: 1,
                })
            }
            MockReply::Error(e) => Err(e),
        }
    }

    fn accepts_images(&self) -> bool {
        self.accepts_images
    }
}

pub(crate) fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Deterministic uniform draw in [0, 1) keyed by `key` and an optional seed.
pub fn uniform_draw(key: &str, seed: Option<u64>) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(key.as_bytes());
    hasher.update(seed.unwrap_or(0).to_le_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

/// Unit-norm pseudo-embeddings derived from a SHA-256 of the text.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let seed: [u8; 32] = Sha256::digest(text.as_bytes()).into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        let mut values: Vec<f64> = (0..self.dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        } else {
            values[0] = 1.0;
        }
        EmbeddingVector::new(values).expect("finite by construction")
    }
}

#[async_trait]
impl Embedder for HashEmbedder {
    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Fixed lookup table of embeddings; unknown texts are rejected.
#[derive(Debug, Clone, Default)]
pub struct StaticEmbedder {
    table: HashMap<String, EmbeddingVector>,
}

impl StaticEmbedder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: impl Into<String>, vector: EmbeddingVector) {
        self.table.insert(text.into(), vector);
    }
}

#[async_trait]
impl Embedder for StaticEmbedder {
    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, GatewayError> {
        texts
            .iter()
            .map(|t| {
                self.table.get(t).cloned().ok_or_else(|| GatewayError::ProviderRejection {
                    status: 404,
                    message: format!("no static embedding for {t:?}"),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{describe_image, embed_texts, test_images, ChatMessage, ImageAttachment};

    fn cfg() -> ModelConfig {
        ModelConfig::experiment("mock")
    }

    #[tokio::test]
    async fn scripted_echo() {
        let mock = MockProvider::always("Yes [EXP] fairness");
        let r = mock
            .complete_chat(&ChatRequest::single("s", "anything"), &cfg())
            .await
            .unwrap();
        assert_eq!(r.text, "Yes [EXP] fairness");
        assert_eq!(r.usage.completion_tokens, 3);
    }

    #[tokio::test]
    async fn identical_inputs_give_identical_responses() {
        let mock = MockProvider::new().fallback(|req, cfg| {
            let p = uniform_draw(req.last_user_text(), cfg.seed());
            MockReply::Text(format!("{p}"))
        });
        let req = ChatRequest::single("s", "offer 3");
        let c = cfg().with_seed(Some(11));
        let a = mock.complete_chat(&req, &c).await.unwrap();
        let b = mock.complete_chat(&req, &c).await.unwrap();
        assert_eq!(a, b);
    }

    #[tokio::test]
    async fn script_replays_in_order_then_repeats_last() {
        let mock = MockProvider::new().script("q", vec!["one".into(), "two".into()]);
        let req = ChatRequest::single("", "q");
        let mut out = Vec::new();
        for _ in 0..3 {
            out.push(mock.complete_chat(&req, &cfg()).await.unwrap().text);
        }
        assert_eq!(out, ["one", "two", "two"]);
    }

    #[tokio::test]
    async fn unmatched_request_is_rejected() {
        let mock = MockProvider::new().reply_when("hello", "hi");
        let err = mock
            .complete_chat(&ChatRequest::single("", "bye"), &cfg())
            .await
            .unwrap_err();
        assert!(matches!(err, GatewayError::ProviderRejection { status: 404, .. }));
    }

    #[tokio::test]
    async fn vision_mock_echoes_description() {
        let png = test_images::png(3, 3, [10, 200, 10]);
        let mock = MockProvider::new().expect_image(&png, "a ripe guava fruit");
        let text = describe_image(&mock, &png, "Describe this item.", &cfg()).await.unwrap();
        assert_eq!(text, "a ripe guava fruit");
        let call = &mock.captured()[0];
        assert_eq!(call.request.messages()[0].images[0].bytes(), png.as_slice());
    }

    #[tokio::test]
    async fn vision_mock_rejects_unexpected_image() {
        let expected = test_images::png(3, 3, [10, 200, 10]);
        let other = test_images::png(3, 3, [1, 2, 3]);
        let mock = MockProvider::new().expect_image(&expected, "plate with palm pith and guava fruit");
        let err = describe_image(&mock, &other, "Describe.", &cfg()).await.unwrap_err();
        assert!(matches!(err, GatewayError::ProviderRejection { status: 400, .. }));
    }

    #[tokio::test]
    async fn describe_image_rejects_empty_blob() {
        let mock = MockProvider::always("x").accepting_images(true);
        let err = describe_image(&mock, &[], "Describe.", &cfg()).await.unwrap_err();
        assert!(matches!(err, GatewayError::UnsupportedImage(_)));
    }

    #[tokio::test]
    async fn text_only_mock_refuses_images() {
        let mock = MockProvider::always("x");
        let img = ImageAttachment::from_bytes(test_images::png(1, 1, [0, 0, 0])).unwrap();
        let req = ChatRequest::new("", vec![ChatMessage::user("see").with_images(vec![img])]).unwrap();
        assert!(mock.complete_chat(&req, &cfg()).await.is_err());
    }

    #[tokio::test]
    async fn hash_embeddings_shape_and_norm() {
        let e = HashEmbedder::new(8);
        let v = embed_texts(&e, &["a".to_string()]).await.unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].dimension(), 8);
        let xs = embed_texts(&e, &["x".to_string(), "x".to_string()]).await.unwrap();
        assert_eq!(xs[0], xs[1]);
        let h = e.embed_one("hadza diet");
        assert!((h.dot(&h) - 1.0).abs() < 1e-9);
        assert_ne!(e.embed_one("hadza diet"), e.embed_one("hadza diets"));
    }

    #[tokio::test]
    async fn empty_text_is_rejected() {
        let e = HashEmbedder::new(4);
        assert!(embed_texts(&e, &["ok".into(), "  ".into()]).await.is_err());
    }

    #[tokio::test]
    async fn inconsistent_dimensions_are_detected() {
        let mut s = StaticEmbedder::new();
        s.insert("a", EmbeddingVector::new(vec![1.0, 0.0]).unwrap());
        s.insert("b", EmbeddingVector::new(vec![1.0, 0.0, 0.0]).unwrap());
        let err = embed_texts(&s, &["a".into(), "b".into()]).await.unwrap_err();
        assert_eq!(err, GatewayError::DimensionMismatch { expected: 2, actual: 3 });
    }

    #[test]
    fn uniform_draw_is_in_unit_interval_and_seed_sensitive() {
        let a = uniform_draw("k", Some(1));
        let b = uniform_draw("k", Some(2));
        assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
        assert_ne!(a, b);
        assert_eq!(a, uniform_draw("k", Some(1)));
    }
}
