//! Endowment session state and its forward-only phase machine.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use sca_core::gateway::Role;
use sca_core::ModelConfig;

use crate::error::ServiceError;

pub const SESSION_FORMAT: &str = "sca-session/1";
pub const RECORD_FORMAT: &str = "sca-endowment/1";
pub const GREETING: &str = "Hi!";
pub const MAX_IMAGES_PER_TURN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ElicitingItems,
    ItemsPresented,
    Endowed,
    Decided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Keep,
    Exchange,
}

/// Stored image, addressed by the SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub digest: String,
    pub media_type: String,
    /// Text stand-in used with text-only backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageRef>,
    pub at: DateTime<Utc>,
}

impl Turn {
    pub fn user(text: impl Into<String>, images: Vec<ImageRef>, at: DateTime<Utc>) -> Self {
        Self { speaker: Role::User, text: text.into(), images, at }
    }

    pub fn assistant(text: impl Into<String>, at: DateTime<Utc>) -> Self {
        Self { speaker: Role::Assistant, text: text.into(), images: Vec::new(), at }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageRef>,
}

/// Operations that move a session or depend on its phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    Message,
    RecordItems,
    Endow,
    RecordDecision,
}

impl Phase {
    /// Whether `op` is legal now; decided sessions are closed to everything.
    pub fn permits(self, op: Operation) -> Result<(), ServiceError> {
        let ok = match (self, op) {
            (Phase::Decided, Operation::RecordDecision) => return Err(ServiceError::DoubleRecord),
            (Phase::Decided, _) => return Err(ServiceError::SessionClosed),
            (_, Operation::Message) => true,
            (Phase::ElicitingItems, Operation::RecordItems) => true,
            (Phase::ItemsPresented, Operation::Endow) => true,
            (Phase::Endowed, Operation::RecordDecision) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ServiceError::WrongPhase { phase: self, operation: format!("{op:?}") })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndowmentSession {
    pub format: String,
    pub session_id: String,
    pub profile_id: String,
    pub tribe: String,
    pub system_prompt: String,
    pub model_config: ModelConfig,
    /// Seed for a random endowment when the request gives none.
    pub seed: u64,
    pub phase: Phase,
    pub transcript: Vec<Turn>,
    pub items: Vec<Item>,
    /// One-based number of the endowed item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endowed_item: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl EndowmentSession {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        session_id: String,
        profile_id: String,
        tribe: String,
        system_prompt: String,
        model_config: ModelConfig,
        seed: u64,
        at: DateTime<Utc>,
    ) -> Self {
        Self {
            format: SESSION_FORMAT.to_string(),
            session_id,
            profile_id,
            tribe,
            system_prompt,
            model_config,
            seed,
            phase: Phase::ElicitingItems,
            transcript: vec![Turn::assistant(GREETING, at)],
            items: Vec::new(),
            endowed_item: None,
            decision: None,
            rationale: None,
            created_at: at,
            updated_at: at,
        }
    }

    pub fn append_exchange(&mut self, user: Turn, reply: Turn) -> Result<(), ServiceError> {
        self.phase.permits(Operation::Message)?;
        self.updated_at = reply.at;
        self.transcript.push(user);
        self.transcript.push(reply);
        Ok(())
    }

    pub fn set_items(&mut self, items: Vec<Item>, at: DateTime<Utc>) -> Result<(), ServiceError> {
        self.phase.permits(Operation::RecordItems)?;
        validate_items(&items)?;
        self.items = items;
        self.phase = Phase::ItemsPresented;
        self.updated_at = at;
        Ok(())
    }

    /// Records the endowment of item `number` (one-based) and the turns that announced it.
    pub fn endow(&mut self, number: usize, turns: Vec<Turn>, at: DateTime<Utc>) -> Result<(), ServiceError> {
        self.phase.permits(Operation::Endow)?;
        if number == 0 || number > self.items.len() {
            return Err(ServiceError::InvalidRequest(format!(
                "item must be 1..={} or \"random\"",
                self.items.len()
            )));
        }
        self.endowed_item = Some(number);
        self.transcript.extend(turns);
        self.phase = Phase::Endowed;
        self.updated_at = at;
        Ok(())
    }

    pub fn decide(&mut self, decision: Decision, rationale: Option<String>, at: DateTime<Utc>) -> Result<(), ServiceError> {
        self.phase.permits(Operation::RecordDecision)?;
        self.decision = Some(decision);
        self.rationale = rationale;
        self.phase = Phase::Decided;
        self.updated_at = at;
        Ok(())
    }

    pub fn endowed_label(&self) -> Option<&str> {
        self.endowed_item.map(|n| self.items[n - 1].label.as_str())
    }

    pub fn to_record(&self) -> Option<EndowmentTrialRecord> {
        Some(EndowmentTrialRecord {
            format: RECORD_FORMAT.to_string(),
            session_id: self.session_id.clone(),
            profile_id: self.profile_id.clone(),
            tribe: self.tribe.clone(),
            items: self.items.clone(),
            endowed_item: self.endowed_item?,
            decision: self.decision?,
            rationale: self.rationale.clone(),
            transcript: self.transcript.clone(),
            model_config: self.model_config.clone(),
            created_at: self.created_at,
            decided_at: self.updated_at,
        })
    }
}

pub fn validate_items(items: &[Item]) -> Result<(), ServiceError> {
    if items.len() != 2 {
        return Err(ServiceError::InvalidRequest(format!("exactly 2 items are required, got {}", items.len())));
    }
    if items.iter().any(|i| i.label.trim().is_empty()) {
        return Err(ServiceError::InvalidRequest("item labels must not be empty".into()));
    }
    if items[0].label.trim().to_lowercase() == items[1].label.trim().to_lowercase() {
        return Err(ServiceError::DuplicateItems(items[0].label.clone()));
    }
    Ok(())
}

/// Outcome of a completed session, persisted once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndowmentTrialRecord {
    pub format: String,
    pub session_id: String,
    pub profile_id: String,
    pub tribe: String,
    pub items: Vec<Item>,
    pub endowed_item: usize,
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub transcript: Vec<Turn>,
    pub model_config: ModelConfig,
    pub created_at: DateTime<Utc>,
    pub decided_at: DateTime<Utc>,
}
