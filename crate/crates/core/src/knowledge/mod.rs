//! Tribe knowledge bases: web search, concurrent fetching and cleaning,
//! word-window chunking, embedding and exact top-k retrieval.

mod chunk;
mod fetch;
mod html;
mod index;
mod search;
mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::gateway::GatewayError;

pub use chunk::{chunk_document, Chunk, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
pub use fetch::{
    fetch_documents, fixture_page_name, FetchError, FetchFailure, FetchReport, FixtureFetcher,
    HttpFetcher, PageFetcher, DEFAULT_FETCH_TIMEOUT, DEFAULT_PARALLELISM,
};
pub use html::html_to_text;
pub use index::{build_index, retrieve, ChunkIndex, RetrievalQuery, Similarity, DEFAULT_K};
pub use search::{
    normalize_url, search, search_query_for, FixtureSearch, GoogleSearch, SearchBackend, SearchHit,
};
pub use store::{build_knowledge_base, KbManifest, SourceRecord, KnowledgeBase, KnowledgeBaseOptions, KB_FORMAT};

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("search backend error: {0}")]
    SearchBackend(String),
    #[error("search for {query:?} returned no results")]
    EmptyResultSet { query: String },
    #[error("every fetch failed ({} link(s))", .failures.len())]
    AllFetchesFailed { failures: Vec<FetchFailure> },
    #[error("invalid chunking: overlap {overlap} must be smaller than chunk size {chunk_size}")]
    InvalidChunking { chunk_size: usize, overlap: usize },
    #[error("cannot build an index from zero chunks")]
    EmptyIndex,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Embedding(#[from] GatewayError),
    #[error("knowledge base storage: {0}")]
    Storage(String),
}

impl From<std::io::Error> for KnowledgeError {
    fn from(e: std::io::Error) -> Self {
        KnowledgeError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for KnowledgeError {
    fn from(e: serde_json::Error) -> Self {
        KnowledgeError::Storage(e.to_string())
    }
}

/// One search result, ranked from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLink {
    pub url: Url,
    pub rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

/// Cleaned text of one fetched source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub source: SourceLink,
    pub text: String,
    pub fetched_at: DateTime<Utc>,
    pub word_count: usize,
}

impl Document {
    pub fn new(source: SourceLink, text: String, fetched_at: DateTime<Utc>) -> Self {
        let word_count = text.split_whitespace().count();
        Self {
            source,
            text,
            fetched_at,
            word_count,
        }
    }
}
