use std::path::{Path, PathBuf};
use std::time::Duration;

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use super::{html_to_text, Document, KnowledgeError, SourceLink};
use crate::time::Timestamper;

pub const DEFAULT_FETCH_TIMEOUT: Duration = Duration::from_secs(20);
pub const DEFAULT_PARALLELISM: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum FetchError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("timed out")]
    Timeout,
    #[error("transport: {0}")]
    Transport(String),
    #[error("no cached page at {0}")]
    Missing(String),
    #[error("page has no visible text")]
    NoText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub source: SourceLink,
    pub error: FetchError,
}

#[derive(Debug, Clone, Default)]
pub struct FetchReport {
    pub documents: Vec<Document>,
    pub failures: Vec<FetchFailure>,
}

/// Retrieves the raw HTML behind a link.
#[async_trait]
pub trait PageFetcher: Send + Sync {
    async fn fetch_html(&self, url: &Url) -> Result<String, FetchError>;
}

#[derive(Debug, Clone)]
pub struct HttpFetcher {
    client: reqwest::Client,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Result<Self, KnowledgeError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("sca/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| KnowledgeError::InvalidArgument(e.to_string()))?;
        Ok(Self { client })
    }
}

#[async_trait]
impl PageFetcher for HttpFetcher {
    async fn fetch_html(&self, url: &Url) -> Result<String, FetchError> {
        let response = self.client.get(url.clone()).send().await.map_err(|e| {
            if e.is_timeout() {
                FetchError::Timeout
            } else {
                FetchError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Status(status.as_u16()));
        }
        response.text().await.map_err(|e| {
            if e.is_timeout() {
                FetchError::Timeout
            } else {
                FetchError::Transport(e.to_string())
            }
        })
    }
}

/// File name under `pages/` holding the cached copy of `url`.
pub fn fixture_page_name(url: &Url) -> String {
    let key = super::normalize_url(url);
    let key = key
        .split_once("://")
        .map(|(_, rest)| rest)
        .unwrap_or(&key);
    let slug: String = key
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{slug}.html")
}

/// Serves pages from `<dir>/pages/`, the layout `FixtureSearch` shares.
#[derive(Debug, Clone)]
pub struct FixtureFetcher {
    pages: PathBuf,
}

impl FixtureFetcher {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        Self {
            pages: dir.as_ref().join("pages"),
        }
    }
}

#[async_trait]
impl PageFetcher for FixtureFetcher {
    async fn fetch_html(&self, url: &Url) -> Result<String, FetchError> {
        let path = self.pages.join(fixture_page_name(url));
        tokio::fs::read_to_string(&path)
            .await
            .map_err(|_| FetchError::Missing(path.display().to_string()))
    }
}

/// Fetches and cleans every link with at most `parallelism` requests in flight.
///
/// Output follows input order. A failing link is recorded and the batch continues.
pub async fn fetch_documents(
    fetcher: &dyn PageFetcher,
    links: &[SourceLink],
    parallelism: usize,
    clock: Timestamper,
) -> Result<FetchReport, KnowledgeError> {
    if parallelism == 0 {
        return Err(KnowledgeError::InvalidArgument("parallelism must be at least 1".into()));
    }
    let outcomes: Vec<_> = stream::iter(links.iter().cloned())
        .map(|link| async move {
            let result = fetcher.fetch_html(&link.url).await.and_then(|html| {
                let text = html_to_text(&html);
                if text.is_empty() {
                    Err(FetchError::NoText)
                } else {
                    Ok(text)
                }
            });
            (link, result, clock.now())
        })
        .buffered(parallelism)
        .collect()
        .await;

    let mut report = FetchReport::default();
    for (link, result, fetched_at) in outcomes {
        match result {
            Ok(text) => report.documents.push(Document::new(link, text, fetched_at)),
            Err(error) => {
                tracing::warn!(url = %link.url, %error, "fetch failed");
                report.failures.push(FetchFailure {
                    source: link,
                    error,
                });
            }
        }
    }
    if report.documents.is_empty() && !links.is_empty() {
        return Err(KnowledgeError::AllFetchesFailed {
            failures: report.failures,
        });
    }
    Ok(report)
}
