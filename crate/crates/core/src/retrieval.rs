//! Keyword-first retrieval with cosine fallback.
//!
//! Phase 1 walks the query's n-grams (longest first, left to right) and
//! collects exact keyword hits. Phase 2 embeds the whole query and takes the
//! vector top-K, either only when phase 1 found nothing
//! ([`RetrievalPolicy::StrictFallback`], the default) or whenever phase 1
//! left room under `k_total` ([`RetrievalPolicy::Fill`]).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{unit_normalize, BackendError, Embedder};
use crate::corpus::{DocId, Document};
use crate::index::{normalize_keyword, vector_topk, IndexBundle, IndexError};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid retrieval config: {0}")]
    Config(String),
    #[error("query embedding failed: {0}")]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("index refers to unknown document {0}")]
    UnknownDocument(DocId),
    #[error("vectors were built by {index}, but the query embedder is {query}")]
    EmbedderMismatch { index: String, query: String },
    #[error("query embedding is a zero vector")]
    ZeroQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalPolicy {
    #[default]
    StrictFallback,
    Fill,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub k_vector: usize,
    pub k_total: usize,
    pub policy: RetrievalPolicy,
    pub max_phrase_len: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k_vector: 5,
            k_total: 8,
            policy: RetrievalPolicy::StrictFallback,
            max_phrase_len: crate::corpus::MAX_PHRASE_LEN,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k_vector < 1 || self.k_vector > self.k_total {
            return Err(RetrievalError::Config(format!(
                "need 1 <= k_vector <= k_total, got k_vector={} k_total={}",
                self.k_vector, self.k_total
            )));
        }
        if self.max_phrase_len < 1 {
            return Err(RetrievalError::Config("max_phrase_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Keyword,
    Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub doc: Document,
    /// 1.0 for keyword hits, cosine similarity for vector hits.
    pub score: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_phrase: Option<String>,
}

/// All n-grams of the normalized query for n = max..1, left to right,
/// first occurrence kept.
pub fn extract_query_terms(query: &str, max_phrase_len: usize) -> Vec<String> {
    let normalized = normalize_keyword(query);
    if normalized.is_empty() {
        return Vec::new();
    }
    let tokens: Vec<&str> = normalized.split(' ').collect();
    let mut seen = HashSet::new();
    let mut terms = Vec::new();
    for n in (1..=max_phrase_len.min(tokens.len())).rev() {
        for window in tokens.windows(n) {
            let phrase = window.join(" ");
            if seen.insert(phrase.clone()) {
                terms.push(phrase);
            }
        }
    }
    terms
}

pub fn retrieve(
    query: &str,
    index: &IndexBundle,
    embedder: &dyn Embedder,
    config: &RetrievalConfig,
) -> Result<Vec<RetrievalResult>, RetrievalError> {
    config.validate()?;
    let lookup_doc = |id: &DocId| {
        index
            .doc(id)
            .cloned()
            .ok_or_else(|| RetrievalError::UnknownDocument(id.clone()))
    };

    let mut results: Vec<RetrievalResult> = Vec::new();
    let mut included: HashSet<DocId> = HashSet::new();
    let max_len = config.max_phrase_len.min(index.keyword.max_phrase_len.max(1));

    'phrases: for phrase in extract_query_terms(query, max_len) {
        for id in index.keyword.entries.get(&phrase).into_iter().flatten() {
            if results.len() >= config.k_total {
                break 'phrases;
            }
            if included.insert(id.clone()) {
                results.push(RetrievalResult {
                    doc: lookup_doc(id)?,
                    score: 1.0,
                    provenance: Provenance::Keyword,
                    matched_phrase: Some(phrase.clone()),
                });
            }
        }
    }

    let run_vector = match config.policy {
        RetrievalPolicy::StrictFallback => results.is_empty(),
        RetrievalPolicy::Fill => results.len() < config.k_total,
    };
    if !run_vector || index.vectors.is_empty() || query.trim().is_empty() {
        return Ok(results);
    }

    let query_embedder = embedder.embedder_id();
    if query_embedder != index.vectors.embedder_id() {
        return Err(RetrievalError::EmbedderMismatch {
            index: index.vectors.embedder_id().to_owned(),
            query: query_embedder,
        });
    }
    let raw = embedder
        .embed_texts(&[query.trim().to_owned()])?
        .into_iter()
        .next()
        .ok_or(RetrievalError::ZeroQuery)?;
    let unit = unit_normalize(&raw).ok_or(RetrievalError::ZeroQuery)?;
    for (id, score) in vector_topk(&index.vectors, &unit, config.k_vector)? {
        if results.len() >= config.k_total {
            break;
        }
        if included.insert(id.clone()) {
            results.push(RetrievalResult {
                doc: lookup_doc(&id)?,
                score,
                provenance: Provenance::Vector,
                matched_phrase: None,
            });
        }
    }
    Ok(results)
}
