use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::prompts::{build_rag_prompt, direct_prompt, rag_query, self_ask_prompt, SELF_ASK_COMPOSE};
use super::{CulturalProfile, ProfileError, ProfileWarning, RelevantFactors, Strategy};
use crate::experiment::Prompt;
use crate::gateway::{ChatMessage, ChatModel, ChatRequest, ChatResponse, Embedder, ModelConfig};
use crate::knowledge::{
    fetch_documents, normalize_url, retrieve, search, KnowledgeBase, KnowledgeError, PageFetcher,
    RetrievalQuery, SearchBackend, SourceLink, DEFAULT_K,
};
use crate::time::Timestamper;

pub const DEFAULT_MAX_ITERATIONS: u32 = 10;
pub const INTERMEDIATE_ANSWER_WORDS: usize = 150;
pub const NO_RESULTS: &str = "No results found.";
const RESULTS_PER_QUESTION: usize = 3;

static FOLLOW_UP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?mi)^[ \t]*follow[ -]up:[ \t]*(.*\S)[ \t]*$").unwrap());
static FINAL_ANSWER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)so the final answer is:").unwrap());

fn truncation(response: &ChatResponse, config: &ModelConfig) -> Vec<ProfileWarning> {
    if response.usage.completion_tokens >= u64::from(config.max_tokens()) {
        vec![ProfileWarning::Truncated {
            completion_tokens: response.usage.completion_tokens,
            max_tokens: config.max_tokens(),
        }]
    } else {
        Vec::new()
    }
}

pub async fn generate_profile_direct(
    tribe: &str,
    factors: &RelevantFactors,
    model: &dyn ChatModel,
    config: &ModelConfig,
    clock: Timestamper,
) -> Result<CulturalProfile, ProfileError> {
    let prompt = direct_prompt(tribe, factors);
    let response = model
        .complete_chat(&ChatRequest::single(&prompt.system, &prompt.user), config)
        .await?;
    let warnings = truncation(&response, config);
    CulturalProfile::new(
        tribe.to_string(),
        response.text.trim().to_string(),
        Strategy::Direct,
        Vec::new(),
        config.clone(),
        clock.now(),
        warnings,
        prompt,
    )
}

/// Retrieves the chunks closest to the profile query and asks the model to
/// write the profile from them alone.
pub async fn generate_profile_rag(
    tribe: &str,
    factors: &RelevantFactors,
    kb: &KnowledgeBase,
    embedder: &dyn Embedder,
    model: &dyn ChatModel,
    config: &ModelConfig,
    clock: Timestamper,
) -> Result<CulturalProfile, ProfileError> {
    if kb.index.is_empty() {
        return Err(ProfileError::EmptyKnowledgeBase);
    }
    let query = RetrievalQuery::new(rag_query(tribe, factors), DEFAULT_K)?;
    let hits = retrieve(&kb.index, &query, embedder).await?;
    let context: Vec<&str> = hits.iter().map(|(c, _)| c.text.as_str()).collect();
    let prompt = Prompt {
        system: String::new(),
        user: build_rag_prompt(&context, tribe, factors),
    };
    let response = model
        .complete_chat(&ChatRequest::single(&prompt.system, &prompt.user), config)
        .await?;
    let warnings = truncation(&response, config);

    let mut sources: Vec<SourceLink> = Vec::new();
    for link in kb.sources() {
        if !sources.iter().any(|s| normalize_url(&s.url) == normalize_url(&link.url)) {
            sources.push(link);
        }
    }
    if sources.is_empty() {
        return Err(ProfileError::EmptyKnowledgeBase);
    }
    CulturalProfile::new(
        tribe.to_string(),
        response.text.trim().to_string(),
        Strategy::SearchRag,
        sources,
        config.clone(),
        clock.now(),
        warnings,
        prompt,
    )
}

/// Search capabilities the self-ask loop answers its questions with.
#[derive(Clone, Copy)]
pub struct SelfAskTools<'a> {
    pub search: &'a dyn SearchBackend,
    pub fetcher: &'a dyn PageFetcher,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfAskStep {
    pub follow_up: String,
    pub intermediate_answer: String,
    /// Page the answer was read from, if any.
    pub source: Option<SourceLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelfAskTrace {
    pub steps: Vec<SelfAskStep>,
    pub iterations_used: u32,
    pub max_iterations: u32,
    /// The iteration cap was hit and the profile was composed on request.
    pub forced_composition: bool,
}

enum Turn {
    FollowUp { question: String, kept: String },
    Final(String),
}

fn classify(text: &str) -> Turn {
    if let Some(m) = FINAL_ANSWER.find(text) {
        return Turn::Final(text[m.end()..].trim().to_string());
    }
    match FOLLOW_UP.captures(text) {
        Some(c) => {
            let line_end = c.get(0).unwrap().end();
            Turn::FollowUp {
                question: c[1].trim().to_string(),
                kept: text[..line_end].trim().to_string(),
            }
        }
        None => Turn::Final(text.trim().to_string()),
    }
}

fn strip_final_marker(text: &str) -> String {
    match FINAL_ANSWER.find(text) {
        Some(m) => text[m.end()..].trim().to_string(),
        None => text.trim().to_string(),
    }
}

/// First words of the best page found for `question`.
async fn answer_question(
    tools: SelfAskTools<'_>,
    question: &str,
    clock: Timestamper,
) -> Result<(String, Option<SourceLink>), ProfileError> {
    let links = match search(tools.search, question, RESULTS_PER_QUESTION).await {
        Ok(links) => links,
        Err(KnowledgeError::EmptyResultSet { .. }) => return Ok((NO_RESULTS.to_string(), None)),
        Err(e) => return Err(e.into()),
    };
    let report = match fetch_documents(tools.fetcher, &links, RESULTS_PER_QUESTION, clock).await {
        Ok(report) => report,
        Err(KnowledgeError::AllFetchesFailed { .. }) => return Ok((NO_RESULTS.to_string(), None)),
        Err(e) => return Err(e.into()),
    };
    match report.documents.into_iter().next() {
        Some(doc) => {
            let words: Vec<&str> = doc.text.split_whitespace().take(INTERMEDIATE_ANSWER_WORDS).collect();
            Ok((words.join(" "), Some(doc.source)))
        }
        None => Ok((NO_RESULTS.to_string(), None)),
    }
}

/// Question-or-final loop: each "Follow up:" line is answered from a web
/// search and fed back; the loop ends on a final answer or after
/// `max_iterations` model turns, in which case the model is asked to compose
/// the profile from what it has gathered.
pub async fn generate_profile_self_ask(
    tribe: &str,
    factors: &RelevantFactors,
    tools: SelfAskTools<'_>,
    model: &dyn ChatModel,
    config: &ModelConfig,
    max_iterations: u32,
    clock: Timestamper,
) -> Result<(CulturalProfile, SelfAskTrace), ProfileError> {
    if max_iterations == 0 {
        return Err(ProfileError::InvalidArgument("max_iterations must be at least 1".into()));
    }
    let prompt = self_ask_prompt(tribe, factors);
    let mut messages = vec![ChatMessage::user(&prompt.user)];
    let mut trace = SelfAskTrace {
        max_iterations,
        ..SelfAskTrace::default()
    };
    let mut final_answer = None;

    while trace.iterations_used < max_iterations {
        trace.iterations_used += 1;
        let request = ChatRequest::new(&prompt.system, messages.clone())?;
        let response = model.complete_chat(&request, config).await?;
        match classify(&response.text) {
            Turn::Final(body) => {
                final_answer = Some((body, truncation(&response, config)));
                break;
            }
            Turn::FollowUp { question, kept } => {
                let (answer, source) = answer_question(tools, &question, clock).await?;
                tracing::debug!(tribe, %question, "self-ask follow-up answered");
                messages.push(ChatMessage::assistant(kept));
                messages.push(ChatMessage::user(format!("Intermediate answer: {answer}")));
                trace.steps.push(SelfAskStep {
                    follow_up: question,
                    intermediate_answer: answer,
                    source,
                });
            }
        }
    }

    let (body, warnings) = match final_answer {
        Some(done) => done,
        None => {
            trace.forced_composition = true;
            let last = messages.last_mut().expect("loop ran at least once");
            last.content = format!("{}\n\n{SELF_ASK_COMPOSE}", last.content);
            let request = ChatRequest::new(&prompt.system, messages)?;
            let response = model.complete_chat(&request, config).await?;
            (strip_final_marker(&response.text), truncation(&response, config))
        }
    };

    let mut sources: Vec<SourceLink> = Vec::new();
    for link in trace.steps.iter().filter_map(|s| s.source.clone()) {
        if !sources.iter().any(|s| normalize_url(&s.url) == normalize_url(&link.url)) {
            sources.push(link);
        }
    }
    let profile = CulturalProfile::new(
        tribe.to_string(),
        body,
        Strategy::SelfAsk,
        sources,
        config.clone(),
        clock.now(),
        warnings,
        prompt,
    )?;
    Ok((profile, trace))
}
