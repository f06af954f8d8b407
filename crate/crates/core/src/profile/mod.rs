//! Cultural profiles built by direct prompting, a self-ask search loop, or
//! retrieval over a tribe knowledge base, with their provenance.

mod generate;
mod prompts;
mod store;

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::Prompt;
use crate::gateway::{GatewayError, ModelConfig};
use crate::knowledge::{KnowledgeError, SourceLink};

pub use generate::{
    generate_profile_direct, generate_profile_rag, generate_profile_self_ask, SelfAskStep,
    SelfAskTools, SelfAskTrace, DEFAULT_MAX_ITERATIONS, INTERMEDIATE_ANSWER_WORDS, NO_RESULTS,
};
pub use prompts::{
    build_rag_prompt, direct_prompt, rag_query, self_ask_prompt, DIRECT_SYSTEM_PROMPT,
    SELF_ASK_SYSTEM_PROMPT,
};
pub use store::{slugify, ProfileStore, ProfileSummary, StoredProfile, PROFILE_FORMAT};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("relevant factors: {0}")]
    InvalidFactors(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("the knowledge base has no chunks")]
    EmptyKnowledgeBase,
    #[error("unknown profile {0:?}")]
    UnknownProfile(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Knowledge(KnowledgeError),
    #[error("profile store: {0}")]
    Storage(String),
}

impl From<KnowledgeError> for ProfileError {
    fn from(e: KnowledgeError) -> Self {
        match e {
            KnowledgeError::EmptyIndex => ProfileError::EmptyKnowledgeBase,
            KnowledgeError::Embedding(g) => ProfileError::Gateway(g),
            other => ProfileError::Knowledge(other),
        }
    }
}

impl From<std::io::Error> for ProfileError {
    fn from(e: std::io::Error) -> Self {
        ProfileError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for ProfileError {
    fn from(e: serde_json::Error) -> Self {
        ProfileError::Storage(e.to_string())
    }
}

pub const DEFAULT_FACTORS: [&str; 8] = [
    "lifestyle",
    "average age",
    "culture",
    "economic system",
    "political ideologies",
    "values",
    "kinship",
    "Social Organization",
];

/// Ordered, duplicate-free list of topics a profile must cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct RelevantFactors(Vec<String>);

impl RelevantFactors {
    pub fn new<I, S>(factors: I) -> Result<Self, ProfileError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let factors: Vec<String> = factors.into_iter().map(|f| f.into().trim().to_string()).collect();
        if factors.is_empty() {
            return Err(ProfileError::InvalidFactors("at least one factor is required".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.is_empty() {
                return Err(ProfileError::InvalidFactors(format!("factor {} is empty", i + 1)));
            }
            if factors[..i].contains(f) {
                return Err(ProfileError::InvalidFactors(format!("duplicate factor {f:?}")));
            }
        }
        Ok(Self(factors))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

impl Default for RelevantFactors {
    fn default() -> Self {
        Self::new(DEFAULT_FACTORS).expect("default factors are valid")
    }
}

impl TryFrom<Vec<String>> for RelevantFactors {
    type Error = ProfileError;
    fn try_from(v: Vec<String>) -> Result<Self, ProfileError> {
        Self::new(v)
    }
}

impl From<RelevantFactors> for Vec<String> {
    fn from(f: RelevantFactors) -> Self {
        f.0
    }
}

/// Renders the list the way Python prints a list of strings: `['a', 'b']`.
impl fmt::Display for RelevantFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, factor) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let quote = if factor.contains('\'') && !factor.contains('"') { '"' } else { '\'' };
            write!(f, "{quote}")?;
            for c in factor.chars() {
                match c {
                    '\\' => f.write_str("\\\\")?,
                    '\n' => f.write_str("\\n")?,
                    c if c == quote => write!(f, "\\{c}")?,
                    c => write!(f, "{c}")?,
                }
            }
            write!(f, "{quote}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Direct,
    SelfAsk,
    SearchRag,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Direct => "direct",
            Strategy::SelfAsk => "self_ask",
            Strategy::SearchRag => "search_rag",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(Strategy::Direct),
            "self_ask" | "self-ask" => Some(Strategy::SelfAsk),
            "search_rag" | "search-rag" | "rag" => Some(Strategy::SearchRag),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileWarning {
    /// The completion used its whole token budget and is probably cut short.
    Truncated { completion_tokens: u64, max_tokens: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct CulturalProfile {
    tribe: String,
    body: String,
    strategy: Strategy,
    sources: Vec<SourceLink>,
    model_config: ModelConfig,
    created_at: DateTime<Utc>,
    #[serde(default)]
    warnings: Vec<ProfileWarning>,
    prompt: Prompt,
}

#[derive(Deserialize)]
struct RawProfile {
    tribe: String,
    body: String,
    strategy: Strategy,
    sources: Vec<SourceLink>,
    model_config: ModelConfig,
    created_at: DateTime<Utc>,
    #[serde(default)]
    warnings: Vec<ProfileWarning>,
    prompt: Prompt,
}

impl TryFrom<RawProfile> for CulturalProfile {
    type Error = ProfileError;
    fn try_from(r: RawProfile) -> Result<Self, ProfileError> {
        CulturalProfile::new(r.tribe, r.body, r.strategy, r.sources, r.model_config, r.created_at, r.warnings, r.prompt)
    }
}

impl CulturalProfile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tribe: String,
        body: String,
        strategy: Strategy,
        sources: Vec<SourceLink>,
        model_config: ModelConfig,
        created_at: DateTime<Utc>,
        warnings: Vec<ProfileWarning>,
        prompt: Prompt,
    ) -> Result<Self, ProfileError> {
        if tribe.trim().is_empty() {
            return Err(ProfileError::InvalidProfile("tribe name is empty".into()));
        }
        if body.trim().is_empty() {
            return Err(ProfileError::InvalidProfile("profile body is empty".into()));
        }
        match strategy {
            Strategy::Direct if !sources.is_empty() => {
                return Err(ProfileError::InvalidProfile("direct profiles have no sources".into()))
            }
            Strategy::SearchRag if sources.is_empty() => {
                return Err(ProfileError::InvalidProfile("retrieval profiles need sources".into()))
            }
            _ => {}
        }
        Ok(Self { tribe, body, strategy, sources, model_config, created_at, warnings, prompt })
    }

    pub fn tribe(&self) -> &str {
        &self.tribe
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn sources(&self) -> &[SourceLink] {
        &self.sources
    }

    pub fn model_config(&self) -> &ModelConfig {
        &self.model_config
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn warnings(&self) -> &[ProfileWarning] {
        &self.warnings
    }

    pub fn prompt(&self) -> &Prompt {
        &self.prompt
    }
}
