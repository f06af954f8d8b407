//! On-disk layout of a knowledge base directory:
//!
//! * `manifest.json`: format tag, tribe, query, timestamp, chunking parameters,
//!   similarity, the fetched sources (in rank order) and any fetch failures.
//! * `chunks.jsonl`: one [`Chunk`] per line; `doc_id` indexes the manifest's `sources`.
//! * `vectors.jsonl`: one JSON array of floats per line, parallel to `chunks.jsonl`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    build_index, chunk_document, fetch_documents, search, search_query_for, Chunk, ChunkIndex,
    Document, FetchFailure, KnowledgeError, PageFetcher, SearchBackend, Similarity, SourceLink,
    DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP, DEFAULT_PARALLELISM,
};
use crate::gateway::{Embedder, EmbeddingVector};
use crate::time::Timestamper;

pub const KB_FORMAT: &str = "sca-kb/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    #[serde(flatten)]
    pub link: SourceLink,
    pub fetched_at: DateTime<Utc>,
    pub word_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbManifest {
    pub format: String,
    pub tribe: String,
    pub query: String,
    pub created_at: DateTime<Utc>,
    pub chunk_size: usize,
    pub overlap: usize,
    pub similarity: Similarity,
    pub sources: Vec<SourceRecord>,
    #[serde(default)]
    pub failures: Vec<FetchFailure>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeBaseOptions {
    pub top_k: usize,
    pub chunk_size: usize,
    pub overlap: usize,
    pub parallelism: usize,
    pub similarity: Similarity,
    /// Overrides the default "What characterizes the X tribe?" query.
    pub query: Option<String>,
}

impl Default for KnowledgeBaseOptions {
    fn default() -> Self {
        Self {
            top_k: 10,
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: DEFAULT_OVERLAP,
            parallelism: DEFAULT_PARALLELISM,
            similarity: Similarity::default(),
            query: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub manifest: KbManifest,
    pub index: ChunkIndex,
}

impl KnowledgeBase {
    /// Source links in rank order, exactly the successfully fetched set.
    pub fn sources(&self) -> Vec<SourceLink> {
        self.manifest.sources.iter().map(|s| s.link.clone()).collect()
    }

    /// Source a chunk was cut from.
    pub fn source_of(&self, chunk: &Chunk) -> Option<&SourceLink> {
        self.manifest.sources.get(chunk.doc_id).map(|s| &s.link)
    }

    pub fn save(&self, dir: &Path) -> Result<(), KnowledgeError> {
        fs::create_dir_all(dir)?;
        let tmp = dir.join(".manifest.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&self.manifest)? + "\n")?;

        let mut chunks = BufWriter::new(fs::File::create(dir.join("chunks.jsonl"))?);
        for chunk in self.index.chunks() {
            serde_json::to_writer(&mut chunks, chunk)?;
            chunks.write_all(b"\n")?;
        }
        chunks.flush()?;

        let mut vectors = BufWriter::new(fs::File::create(dir.join("vectors.jsonl"))?);
        for v in self.index.vectors() {
            serde_json::to_writer(&mut vectors, v.values())?;
            vectors.write_all(b"\n")?;
        }
        vectors.flush()?;

        fs::rename(tmp, dir.join("manifest.json"))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, KnowledgeError> {
        let manifest: KbManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.format != KB_FORMAT {
            return Err(KnowledgeError::Storage(format!(
                "unsupported knowledge base format {:?} (expected {KB_FORMAT})",
                manifest.format
            )));
        }
        let chunks: Vec<Chunk> = read_jsonl(&dir.join("chunks.jsonl"))?;
        if let Some(c) = chunks.iter().find(|c| c.doc_id >= manifest.sources.len()) {
            return Err(KnowledgeError::Storage(format!(
                "chunk references unknown document {}",
                c.doc_id
            )));
        }
        let raw: Vec<Vec<f64>> = read_jsonl(&dir.join("vectors.jsonl"))?;
        let vectors = raw
            .into_iter()
            .map(EmbeddingVector::new)
            .collect::<Result<Vec<_>, _>>()?;
        let index = ChunkIndex::from_parts(chunks, vectors, manifest.similarity)?;
        Ok(Self { manifest, index })
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, KnowledgeError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            KnowledgeError::Storage(format!("{}:{}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

/// Search, fetch, chunk and embed the sources describing `tribe`.
pub async fn build_knowledge_base(
    tribe: &str,
    backend: &dyn SearchBackend,
    fetcher: &dyn PageFetcher,
    embedder: &dyn Embedder,
    options: &KnowledgeBaseOptions,
    clock: Timestamper,
) -> Result<KnowledgeBase, KnowledgeError> {
    let query = options
        .query
        .clone()
        .unwrap_or_else(|| search_query_for(tribe));
    let links = search(backend, &query, options.top_k).await?;
    let report = fetch_documents(fetcher, &links, options.parallelism, clock).await?;

    let mut chunks = Vec::new();
    for (doc_id, doc) in report.documents.iter().enumerate() {
        chunks.extend(chunk_document(doc_id, doc, options.chunk_size, options.overlap)?);
    }
    let index = build_index(chunks, embedder, options.similarity).await?;
    tracing::info!(
        tribe,
        sources = report.documents.len(),
        failures = report.failures.len(),
        chunks = index.len(),
        "knowledge base built"
    );
    Ok(KnowledgeBase {
        manifest: KbManifest {
            format: KB_FORMAT.to_string(),
            tribe: tribe.to_string(),
            query,
            created_at: clock.now(),
            chunk_size: options.chunk_size,
            overlap: options.overlap,
            similarity: options.similarity,
            sources: report.documents.into_iter().map(source_record).collect(),
            failures: report.failures,
        },
        index,
    })
}

fn source_record(doc: Document) -> SourceRecord {
    SourceRecord {
        link: doc.source,
        fetched_at: doc.fetched_at,
        word_count: doc.word_count,
    }
}
