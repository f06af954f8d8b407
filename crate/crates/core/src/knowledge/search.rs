use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use async_trait::async_trait;
use serde_json::Value;
use url::Url;

use super::{KnowledgeError, SourceLink};

/// Query used to seed a tribe's knowledge base.
pub fn search_query_for(tribe: &str) -> String {
    format!("What characterizes the {tribe} tribe?")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub url: Url,
    pub title: Option<String>,
    pub snippet: Option<String>,
}

impl SearchHit {
    pub fn new(url: Url) -> Self {
        Self {
            url,
            title: None,
            snippet: None,
        }
    }
}

#[async_trait]
pub trait SearchBackend: Send + Sync {
    /// Raw hits in backend order; may contain duplicates.
    async fn raw_search(&self, query: &str, limit: usize) -> Result<Vec<SearchHit>, KnowledgeError>;
}

/// Key used for duplicate detection: no fragment, no trailing slash, lowercase host.
pub fn normalize_url(url: &Url) -> String {
    let mut u = url.clone();
    u.set_fragment(None);
    let s = u.as_str();
    s.strip_suffix('/').unwrap_or(s).to_string()
}

/// Runs `query`, removes duplicate URLs and returns at most `top_k` links ranked 1..n.
pub async fn search(
    backend: &dyn SearchBackend,
    query: &str,
    top_k: usize,
) -> Result<Vec<SourceLink>, KnowledgeError> {
    if query.trim().is_empty() {
        return Err(KnowledgeError::InvalidArgument("search query is empty".into()));
    }
    if top_k == 0 {
        return Err(KnowledgeError::InvalidArgument("top_k must be positive".into()));
    }
    let hits = backend.raw_search(query, top_k).await?;
    let links = dedupe_hits(hits, top_k);
    if links.is_empty() {
        return Err(KnowledgeError::EmptyResultSet {
            query: query.to_string(),
        });
    }
    Ok(links)
}

pub(crate) fn dedupe_hits(hits: Vec<SearchHit>, top_k: usize) -> Vec<SourceLink> {
    let mut seen = HashSet::new();
    hits.into_iter()
        .filter(|h| seen.insert(normalize_url(&h.url)))
        .take(top_k)
        .enumerate()
        .map(|(i, h)| SourceLink {
            url: h.url,
            rank: i as u32 + 1,
            title: h.title,
        })
        .collect()
}

/// Offline backend reading `search.tsv` from a fixtures directory.
///
/// Each non-comment line is `query<TAB>url<TAB>url...`. Queries match exactly,
/// then case-insensitively.
#[derive(Debug, Clone)]
pub struct FixtureSearch {
    dir: PathBuf,
    entries: HashMap<String, Vec<Url>>,
}

impl FixtureSearch {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, KnowledgeError> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join("search.tsv");
        let content = std::fs::read_to_string(&path).map_err(|e| {
            KnowledgeError::SearchBackend(format!("cannot read {}: {e}", path.display()))
        })?;
        let mut entries = HashMap::new();
        for (lineno, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let query = fields.next().unwrap_or_default().trim().to_string();
            let urls = fields
                .filter(|f| !f.trim().is_empty())
                .map(|f| {
                    Url::parse(f.trim()).map_err(|e| {
                        KnowledgeError::SearchBackend(format!(
                            "{}:{}: bad URL {f:?}: {e}",
                            path.display(),
                            lineno + 1
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            entries.insert(query, urls);
        }
        Ok(Self { dir, entries })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[async_trait]
impl SearchBackend for FixtureSearch {
    async fn raw_search(&self, query: &str, _limit: usize) -> Result<Vec<SearchHit>, KnowledgeError> {
        let query = query.trim();
        let urls = self.entries.get(query).or_else(|| {
            self.entries
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(query))
                .map(|(_, v)| v)
        });
        Ok(urls
            .map(|urls| urls.iter().cloned().map(SearchHit::new).collect())
            .unwrap_or_default())
    }
}

/// Google Programmable Search (Custom Search JSON API) backend.
#[derive(Debug, Clone)]
pub struct GoogleSearch {
    api_key: String,
    engine_id: String,
    endpoint: Url,
    client: reqwest::Client,
}

impl GoogleSearch {
    pub fn new(api_key: String, engine_id: String) -> Self {
        Self {
            api_key,
            engine_id,
            endpoint: Url::parse("https://www.googleapis.com/customsearch/v1").expect("static URL"),
            client: reqwest::Client::new(),
        }
    }

    pub fn with_endpoint(mut self, endpoint: Url) -> Self {
        self.endpoint = endpoint;
        self
    }
}

#[async_trait]
impl SearchBackend for GoogleSearch {
    async fn raw_search(&self, query: &str, limit: usize) -> Result<Vec<SearchHit>, KnowledgeError> {
        let num = limit.clamp(1, 10).to_string();
        let response = self
            .client
            .get(self.endpoint.clone())
            .query(&[
                ("key", self.api_key.as_str()),
                ("cx", self.engine_id.as_str()),
                ("q", query),
                ("num", num.as_str()),
            ])
            .send()
            .await
            .map_err(|e| KnowledgeError::SearchBackend(e.to_string()))?;
        let status = response.status();
        let body: Value = response
            .json()
            .await
            .map_err(|e| KnowledgeError::SearchBackend(e.to_string()))?;
        if !status.is_success() {
            return Err(KnowledgeError::SearchBackend(format!("status {status}: {body}")));
        }
        let items = body.get("items").and_then(Value::as_array).cloned().unwrap_or_default();
        Ok(items
            .iter()
            .filter_map(|item| {
                let url = Url::parse(item.get("link")?.as_str()?).ok()?;
                Some(SearchHit {
                    url,
                    title: item.get("title").and_then(Value::as_str).map(str::to_string),
                    snippet: item.get("snippet").and_then(Value::as_str).map(str::to_string),
                })
            })
            .collect())
    }
}
