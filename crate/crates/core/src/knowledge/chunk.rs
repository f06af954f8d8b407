use serde::{Deserialize, Serialize};

use super::{Document, KnowledgeError};

pub const DEFAULT_CHUNK_SIZE: usize = 2000;
pub const DEFAULT_OVERLAP: usize = 200;

/// A window of whitespace-delimited words from one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// Position of the source document within its knowledge base.
    pub doc_id: usize,
    pub ordinal: usize,
    pub text: String,
    /// Half-open word range `[start, end)`.
    pub word_span: (usize, usize),
}

impl Chunk {
    pub fn word_len(&self) -> usize {
        self.word_span.1 - self.word_span.0
    }
}

/// Splits `doc` into windows of `chunk_size` words, each starting
/// `chunk_size - overlap` words after the previous one.
pub fn chunk_document(
    doc_id: usize,
    doc: &Document,
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<Chunk>, KnowledgeError> {
    if chunk_size == 0 || overlap >= chunk_size {
        return Err(KnowledgeError::InvalidChunking {
            chunk_size,
            overlap,
        });
    }
    let words: Vec<&str> = doc.text.split_whitespace().collect();
    Ok(windows(words.len(), chunk_size, overlap)
        .into_iter()
        .enumerate()
        .map(|(ordinal, (start, end))| Chunk {
            doc_id,
            ordinal,
            text: words[start..end].join(" "),
            word_span: (start, end),
        })
        .collect())
}

pub(crate) fn windows(n_words: usize, chunk_size: usize, overlap: usize) -> Vec<(usize, usize)> {
    let stride = chunk_size - overlap;
    let mut spans = Vec::new();
    let mut start = 0;
    while start < n_words {
        let end = (start + chunk_size).min(n_words);
        spans.push((start, end));
        if end == n_words {
            break;
        }
        start += stride;
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::SourceLink;
    use proptest::prelude::*;

    fn doc(words: usize) -> Document {
        let text = (0..words).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        Document::new(
            SourceLink {
                url: "http://example.org".parse().unwrap(),
                rank: 1,
                title: None,
            },
            text,
            crate::time::Timestamper::frozen_epoch().now(),
        )
    }

    #[test]
    fn five_thousand_words() {
        let chunks = chunk_document(0, &doc(5000), 2000, 200).unwrap();
        let starts: Vec<_> = chunks.iter().map(|c| c.word_span.0).collect();
        let lens: Vec<_> = chunks.iter().map(Chunk::word_len).collect();
        assert_eq!(starts, [0, 1800, 3600]);
        assert_eq!(lens, [2000, 2000, 1400]);
        assert!(chunks[2].text.ends_with("w4999"));
        assert!(chunks[1].text.starts_with("w1800 "));
    }

    #[test]
    fn short_document_is_one_chunk() {
        let chunks = chunk_document(0, &doc(10), 2000, 200).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].word_len(), 10);
    }

    #[test]
    fn empty_document_has_no_chunks() {
        assert!(chunk_document(0, &doc(0), 2000, 200).unwrap().is_empty());
    }

    #[test]
    fn overlap_must_be_smaller_than_size() {
        assert!(matches!(
            chunk_document(0, &doc(10), 200, 200),
            Err(KnowledgeError::InvalidChunking { .. })
        ));
    }

    proptest! {
        #[test]
        fn windows_cover_with_exact_overlap(n in 0usize..3000, size in 1usize..400, ov_frac in 0.0f64..1.0) {
            let overlap = ((size as f64) * ov_frac) as usize;
            prop_assume!(overlap < size);
            let spans = windows(n, size, overlap);
            if n == 0 {
                prop_assert!(spans.is_empty());
            } else {
                prop_assert_eq!(spans[0].0, 0);
                prop_assert_eq!(spans.last().unwrap().1, n);
                for (i, &(s, e)) in spans.iter().enumerate() {
                    prop_assert_eq!(s, i * (size - overlap));
                    prop_assert!(e - s <= size);
                    prop_assert!(e > s);
                }
                for pair in spans.windows(2) {
                    prop_assert_eq!(pair[0].1 - pair[1].0, overlap);
                    prop_assert_eq!(pair[0].1 - pair[0].0, size);
                }
            }
        }
    }
}
