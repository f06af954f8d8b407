use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Chunk, KnowledgeError};
use crate::gateway::{embed_texts, Embedder, EmbeddingVector};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Dot,
    #[default]
    Cosine,
}

impl Similarity {
    pub fn score(self, a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
        match self {
            Similarity::Dot => a.dot(b),
            Similarity::Cosine => {
                let denom = a.norm() * b.norm();
                if denom == 0.0 {
                    0.0
                } else {
                    a.dot(b) / denom
                }
            }
        }
    }
}

/// Embedded chunks. Immutable once built.
#[derive(Debug, Clone)]
pub struct ChunkIndex {
    chunks: Vec<Chunk>,
    vectors: Vec<EmbeddingVector>,
    similarity: Similarity,
}

impl ChunkIndex {
    pub fn from_parts(
        chunks: Vec<Chunk>,
        vectors: Vec<EmbeddingVector>,
        similarity: Similarity,
    ) -> Result<Self, KnowledgeError> {
        if chunks.is_empty() {
            return Err(KnowledgeError::EmptyIndex);
        }
        if chunks.len() != vectors.len() {
            return Err(KnowledgeError::Storage(format!(
                "{} chunks but {} vectors",
                chunks.len(),
                vectors.len()
            )));
        }
        let dim = vectors[0].dimension();
        if vectors.iter().any(|v| v.dimension() != dim) {
            return Err(KnowledgeError::Storage("vectors differ in dimension".into()));
        }
        Ok(Self {
            chunks,
            vectors,
            similarity,
        })
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn vectors(&self) -> &[EmbeddingVector] {
        &self.vectors
    }

    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors[0].dimension()
    }

    /// Score of every chunk against `query`, in index order.
    pub fn scores(&self, query: &EmbeddingVector) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| self.similarity.score(query, v))
            .collect()
    }

    /// Positions and scores of the `k` best chunks, best first; ties go to the lower position.
    pub fn top_k(&self, query: &EmbeddingVector, k: usize) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> = self.scores(query).into_iter().enumerate().collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        ranked.truncate(k);
        ranked
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalQuery {
    pub text: String,
    pub k: usize,
}

impl RetrievalQuery {
    pub fn new(text: impl Into<String>, k: usize) -> Result<Self, KnowledgeError> {
        let text = text.into();
        if k == 0 {
            return Err(KnowledgeError::InvalidArgument("k must be at least 1".into()));
        }
        if text.trim().is_empty() {
            return Err(KnowledgeError::InvalidArgument("query text is empty".into()));
        }
        Ok(Self { text, k })
    }
}

pub async fn build_index(
    chunks: Vec<Chunk>,
    embedder: &dyn Embedder,
    similarity: Similarity,
) -> Result<ChunkIndex, KnowledgeError> {
    if chunks.is_empty() {
        return Err(KnowledgeError::EmptyIndex);
    }
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let vectors = embed_texts(embedder, &texts).await?;
    ChunkIndex::from_parts(chunks, vectors, similarity)
}

/// The `min(k, len)` chunks most similar to the query text.
pub async fn retrieve(
    index: &ChunkIndex,
    query: &RetrievalQuery,
    embedder: &dyn Embedder,
) -> Result<Vec<(Chunk, f64)>, KnowledgeError> {
    let q = embed_texts(embedder, std::slice::from_ref(&query.text))
        .await?
        .pop()
        .expect("one vector per text");
    if q.dimension() != index.dimension() {
        return Err(KnowledgeError::Embedding(
            crate::gateway::GatewayError::DimensionMismatch {
                expected: index.dimension(),
                actual: q.dimension(),
            },
        ));
    }
    Ok(index
        .top_k(&q, query.k)
        .into_iter()
        .map(|(i, s)| (index.chunks[i].clone(), s))
        .collect())
}
