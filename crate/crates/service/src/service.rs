use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use sca_core::experiment::build_chat_system_prompt;
use sca_core::gateway::{describe_image, ChatMessage, ChatModel, ChatRequest, Role, DEFAULT_DESCRIBE_INSTRUCTION};
use sca_core::profile::{ProfileStore, ProfileSummary};
use sca_core::time::Timestamper;
use sca_core::ModelConfig;

use crate::error::ServiceError;
use crate::session::{
    Decision, EndowmentSession, EndowmentTrialRecord, ImageRef, Item, Operation, Phase, Turn,
    MAX_IMAGES_PER_TURN,
};
use crate::store::{render_record, DataDir};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub profile_dir: PathBuf,
    pub model_id: String,
    pub describe_model_id: String,
    /// Seed for sessions created without one.
    pub default_seed: u64,
    pub clock: Timestamper,
    /// Shared bearer token; `None` leaves the API open.
    pub token: Option<String>,
}

/// Optional overrides accepted when a session is created.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub profile_id: String,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemInput {
    pub label: String,
    /// Digest of an image already uploaded with a message.
    #[serde(default)]
    pub image_digest: Option<String>,
    /// Base64 PNG or JPEG bytes.
    #[serde(default)]
    pub image_base64: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndowChoice {
    /// One-based item number.
    Item(usize),
    Random { seed: Option<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeOutcome {
    pub user: Turn,
    pub reply: Turn,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndowOutcome {
    pub endowed_item: usize,
    pub label: String,
    /// Ownership message, its reply, the exchange question and its reply.
    pub turns: Vec<Turn>,
    pub reply: Turn,
    pub phase: Phase,
}

struct Slot {
    op: tokio::sync::Mutex<()>,
    state: RwLock<EndowmentSession>,
}

pub struct EndowmentService {
    config: ServiceConfig,
    data: DataDir,
    profiles: ProfileStore,
    chat: Arc<dyn ChatModel>,
    describer: Option<Arc<dyn ChatModel>>,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    next_id: AtomicU64,
}

pub fn ownership_message(item: &str) -> String {
    format!("You are given the {item}")
}

pub fn exchange_question(other: &str) -> String {
    format!("that is ok, would you like to switch for the {other}?")
}

/// Item number (one-based) chosen by a seeded draw.
pub fn random_item(seed: u64, count: usize) -> usize {
    ChaCha8Rng::seed_from_u64(seed).gen_range(0..count) + 1
}

fn session_id(n: u64) -> String {
    format!("s{n:06}")
}

impl EndowmentService {
    /// Opens the data directory and reloads any sessions persisted there.
    pub fn open(
        config: ServiceConfig,
        chat: Arc<dyn ChatModel>,
        describer: Option<Arc<dyn ChatModel>>,
    ) -> Result<Self, ServiceError> {
        let data = DataDir::open(&config.data_dir)?;
        let mut sessions = HashMap::new();
        let mut max = 0;
        for s in data.load_sessions()? {
            if let Some(n) = s.session_id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max = max.max(n);
            }
            sessions.insert(
                s.session_id.clone(),
                Arc::new(Slot { op: tokio::sync::Mutex::new(()), state: RwLock::new(s) }),
            );
        }
        Ok(Self {
            profiles: ProfileStore::new(&config.profile_dir),
            config,
            data,
            chat,
            describer,
            sessions: RwLock::new(sessions),
            next_id: AtomicU64::new(max + 1),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn list_profiles(&self) -> Result<Vec<ProfileSummary>, ServiceError> {
        Ok(self.profiles.list()?)
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn session(&self, id: &str) -> Result<EndowmentSession, ServiceError> {
        Ok(self.slot(id)?.state.read().unwrap().clone())
    }

    pub fn create_session(&self, req: CreateSession) -> Result<EndowmentSession, ServiceError> {
        let stored = self.profiles.resolve(&req.profile_id)?;
        let invalid = |e: sca_core::GatewayError| ServiceError::InvalidRequest(e.to_string());
        let mut model_config = ModelConfig::endowment_chat(req.model_id.as_deref().unwrap_or(&self.config.model_id));
        if let Some(t) = req.temperature {
            model_config = model_config.with_temperature(t).map_err(invalid)?;
        }
        if let Some(m) = req.max_tokens {
            model_config = model_config.with_max_tokens(m).map_err(invalid)?;
        }
        let id = session_id(self.next_id.fetch_add(1, Ordering::SeqCst));
        let session = EndowmentSession::new(
            id.clone(),
            stored.id,
            stored.profile.tribe().to_string(),
            build_chat_system_prompt(Some(stored.profile.body())),
            model_config,
            req.seed.unwrap_or(self.config.default_seed),
            self.config.clock.now(),
        );
        self.data.save_session(&session)?;
        self.sessions.write().unwrap().insert(
            id,
            Arc::new(Slot { op: tokio::sync::Mutex::new(()), state: RwLock::new(session.clone()) }),
        );
        tracing::info!(session = %session.session_id, profile = %session.profile_id, "session created");
        Ok(session)
    }

    async fn describe(&self, attachment: &sca_core::gateway::ImageAttachment) -> Result<String, ServiceError> {
        let describer = self.describer.as_ref().ok_or_else(|| {
            ServiceError::InvalidRequest("the chat model is text-only and no image describer is configured".into())
        })?;
        let config = ModelConfig::endowment_chat(&self.config.describe_model_id);
        Ok(describe_image(describer.as_ref(), attachment.bytes(), DEFAULT_DESCRIBE_INSTRUCTION, &config)
            .await?
            .trim()
            .to_string())
    }

    /// Stores uploaded images and, for a text-only chat model, describes them.
    async fn ingest_images(&self, images: Vec<Vec<u8>>) -> Result<Vec<ImageRef>, ServiceError> {
        let mut refs = Vec::with_capacity(images.len());
        for bytes in images {
            let (mut image, attachment) = self.data.put_image(bytes)?;
            if !self.chat.accepts_images() {
                image.description = Some(self.describe(&attachment).await?);
            }
            refs.push(image);
        }
        Ok(refs)
    }

    /// Chat request for the transcript followed by `pending` user turns and
    /// their replies; the interface greeting is not sent.
    fn build_request(&self, session: &EndowmentSession, pending: &[Turn]) -> Result<ChatRequest, ServiceError> {
        let turns = session
            .transcript
            .iter()
            .chain(pending)
            .skip_while(|t| t.speaker == Role::Assistant);
        let mut messages = Vec::new();
        for turn in turns {
            let message = match turn.speaker {
                Role::Assistant => ChatMessage::assistant(&turn.text),
                Role::User if turn.images.is_empty() => ChatMessage::user(&turn.text),
                Role::User if self.chat.accepts_images() => {
                    let attachments = turn
                        .images
                        .iter()
                        .map(|i| self.data.get_image(i))
                        .collect::<Result<Vec<_>, _>>()?;
                    ChatMessage::user(&turn.text).with_images(attachments)
                }
                Role::User => {
                    let mut text = turn.text.clone();
                    text.push('\n');
                    for (n, image) in turn.images.iter().enumerate() {
                        let description = image.description.as_deref().unwrap_or("(no description available)");
                        text.push_str(&format!("\n[Image {}] {description}", n + 1));
                    }
                    ChatMessage::user(text)
                }
            };
            messages.push(message);
        }
        Ok(ChatRequest::new(&session.system_prompt, messages)?)
    }

    async fn reply_to(&self, session: &EndowmentSession, pending: &[Turn]) -> Result<Turn, ServiceError> {
        let request = self.build_request(session, pending)?;
        let response = self.chat.complete_chat(&request, &session.model_config).await?;
        Ok(Turn::assistant(response.text.trim(), self.config.clock.now()))
    }

    fn commit(&self, slot: &Slot, session: EndowmentSession) -> Result<(), ServiceError> {
        self.data.save_session(&session)?;
        *slot.state.write().unwrap() = session;
        Ok(())
    }

    pub async fn post_message(&self, id: &str, text: String, images: Vec<Vec<u8>>) -> Result<ExchangeOutcome, ServiceError> {
        if images.len() > MAX_IMAGES_PER_TURN {
            return Err(ServiceError::InvalidRequest(format!(
                "at most {MAX_IMAGES_PER_TURN} images per message, got {}",
                images.len()
            )));
        }
        if text.trim().is_empty() && images.is_empty() {
            return Err(ServiceError::InvalidRequest("message is empty".into()));
        }
        let slot = self.slot(id)?;
        let _op = slot.op.lock().await;
        let mut session = slot.state.read().unwrap().clone();
        session.phase.permits(Operation::Message)?;
        let images = self.ingest_images(images).await?;
        let user = Turn::user(text.trim(), images, self.config.clock.now());
        let reply = self.reply_to(&session, std::slice::from_ref(&user)).await?;
        session.append_exchange(user.clone(), reply.clone())?;
        let phase = session.phase;
        self.commit(&slot, session)?;
        Ok(ExchangeOutcome { user, reply, phase })
    }

    pub async fn record_items(&self, id: &str, inputs: Vec<ItemInput>) -> Result<EndowmentSession, ServiceError> {
        let slot = self.slot(id)?;
        let _op = slot.op.lock().await;
        let mut session = slot.state.read().unwrap().clone();
        session.phase.permits(Operation::RecordItems)?;
        let labels: Vec<Item> = inputs
            .iter()
            .map(|i| Item { label: i.label.trim().to_string(), image: None })
            .collect();
        crate::session::validate_items(&labels)?;

        let mut items = Vec::with_capacity(inputs.len());
        for input in inputs {
            let image = match (input.image_digest, input.image_base64) {
                (Some(_), Some(_)) => {
                    return Err(ServiceError::InvalidRequest("give image_digest or image_base64, not both".into()))
                }
                (Some(digest), None) => {
                    let known = session
                        .transcript
                        .iter()
                        .flat_map(|t| &t.images)
                        .find(|i| i.digest == digest)
                        .cloned();
                    let mut image = known.unwrap_or(ImageRef { digest, media_type: String::new(), description: None });
                    let attachment = self.data.get_image(&image)?;
                    image.media_type = attachment.format().media_type().to_string();
                    if image.description.is_none() && self.describer.is_some() {
                        image.description = Some(self.describe(&attachment).await?);
                    }
                    Some(image)
                }
                (None, Some(b64)) => {
                    use base64::Engine;
                    let bytes = base64::engine::general_purpose::STANDARD
                        .decode(b64.trim())
                        .map_err(|e| ServiceError::InvalidRequest(format!("image_base64: {e}")))?;
                    let (mut image, attachment) = self.data.put_image(bytes)?;
                    if self.describer.is_some() {
                        image.description = Some(self.describe(&attachment).await?);
                    }
                    Some(image)
                }
                (None, None) => None,
            };
            items.push(Item { label: input.label.trim().to_string(), image });
        }
        session.set_items(items, self.config.clock.now())?;
        self.commit(&slot, session.clone())?;
        Ok(session)
    }

    /// Tells the agent which item it owns, then offers the swap.
    pub async fn endow_and_offer(&self, id: &str, choice: EndowChoice) -> Result<EndowOutcome, ServiceError> {
        let slot = self.slot(id)?;
        let _op = slot.op.lock().await;
        let mut session = slot.state.read().unwrap().clone();
        session.phase.permits(Operation::Endow)?;
        let number = match choice {
            EndowChoice::Item(n) => n,
            EndowChoice::Random { seed } => random_item(seed.unwrap_or(session.seed), session.items.len()),
        };
        if number == 0 || number > session.items.len() {
            return Err(ServiceError::InvalidRequest(format!(
                "item must be 1..={} or \"random\"",
                session.items.len()
            )));
        }
        let owned = session.items[number - 1].label.clone();
        let other = session.items[2 - number].label.clone();

        let mut turns = vec![Turn::user(ownership_message(&owned), vec![], self.config.clock.now())];
        turns.push(self.reply_to(&session, &turns).await?);
        turns.push(Turn::user(exchange_question(&other), vec![], self.config.clock.now()));
        let reply = self.reply_to(&session, &turns).await?;
        turns.push(reply.clone());

        session.endow(number, turns.clone(), self.config.clock.now())?;
        let phase = session.phase;
        self.commit(&slot, session)?;
        tracing::info!(session = id, item = %owned, "item endowed");
        Ok(EndowOutcome { endowed_item: number, label: owned, turns, reply, phase })
    }

    pub async fn record_decision(
        &self,
        id: &str,
        decision: Decision,
        rationale: Option<String>,
    ) -> Result<EndowmentTrialRecord, ServiceError> {
        let slot = self.slot(id)?;
        let _op = slot.op.lock().await;
        let mut session = slot.state.read().unwrap().clone();
        session.decide(decision, rationale.filter(|r| !r.trim().is_empty()), self.config.clock.now())?;
        let record = session.to_record().expect("decided sessions have a record");
        self.data.write_record(&record)?;
        self.commit(&slot, session)?;
        tracing::info!(session = id, ?decision, "decision recorded");
        Ok(record)
    }

    /// Persisted record bytes, exactly as written.
    pub fn export(&self, id: &str) -> Result<Vec<u8>, ServiceError> {
        let session = self.session(id)?;
        match self.data.read_record(id)? {
            Some(bytes) => Ok(bytes),
            None if session.phase == Phase::Decided => {
                render_record(&session.to_record().expect("decided sessions have a record"))
            }
            None => Err(ServiceError::WrongPhase { phase: session.phase, operation: "Export".into() }),
        }
    }
}
