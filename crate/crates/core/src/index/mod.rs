//! The two retrieval indexes and their on-disk layout.
//!
//! An index directory holds:
//!
//! ```text
//! manifest.json          IndexManifest
//! keyword_index.json     { "normalized phrase": ["d:0", ...], ... }
//! docs.jsonl             one Document per line
//! vectors.bin            binary vector store (see `store`)
//! cache/embeddings.jsonl embedding cache (optional)
//! ```

mod cache;
mod keyword;
mod store;
mod vector;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, Embedder};
use crate::corpus::{CorpusError, DocId, Document};

pub use cache::{cache_key, EmbeddingCache};
pub use keyword::{build_keyword_index, normalize_keyword, KeywordIndex};
pub use store::{
    decode_vectors, encode_vectors, load_index, save_index, DOCS_FILE, KEYWORD_FILE, MANIFEST_FILE,
    VECTORS_FILE, VECTORS_MAGIC,
};
pub use vector::{build_vector_index, vector_topk, BuildStats, VectorIndex, UNIT_NORM_TOLERANCE};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedder returned a zero vector for {id}")]
    ZeroVector { id: DocId },
    #[error("vector for {id} is not unit length (norm {norm})")]
    NotUnit { id: String, norm: f64 },
    #[error("duplicate document id {0}")]
    DuplicateId(DocId),
    #[error("index refers to unknown document {0}")]
    UnknownDocument(DocId),
    #[error("embedding backend failed: {0}")]
    Backend(#[from] BackendError),
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("vectors.bin: bad magic bytes {found:?}, expected \"LRXV\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported index version {0}, expected 1")]
    UnsupportedVersion(u32),
    #[error("vectors.bin is truncated: {0}")]
    Truncated(String),
    #[error("inconsistent index: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub type Result<T> = std::result::Result<T, IndexError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexManifest {
    pub version: u32,
    pub dim: usize,
    pub count: usize,
    pub embedder_id: String,
    pub created_at: String,
    pub max_phrase_len: usize,
}

/// Documents plus both indexes, checked for mutual consistency.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub manifest: IndexManifest,
    pub keyword: KeywordIndex,
    pub vectors: VectorIndex,
    docs: Vec<Document>,
    by_id: HashMap<DocId, usize>,
}

impl IndexBundle {
    pub fn new(
        docs: Vec<Document>,
        keyword: KeywordIndex,
        vectors: VectorIndex,
        created_at: impl Into<String>,
    ) -> Result<Self> {
        let manifest = IndexManifest {
            version: MANIFEST_VERSION,
            dim: vectors.dim(),
            count: vectors.len(),
            embedder_id: vectors.embedder_id().to_owned(),
            created_at: created_at.into(),
            max_phrase_len: keyword.max_phrase_len,
        };
        Self::from_parts(manifest, docs, keyword, vectors)
    }

    pub fn from_parts(
        manifest: IndexManifest,
        docs: Vec<Document>,
        keyword: KeywordIndex,
        vectors: VectorIndex,
    ) -> Result<Self> {
        if manifest.version != MANIFEST_VERSION {
            return Err(IndexError::UnsupportedVersion(manifest.version));
        }
        if manifest.count != vectors.len() {
            return Err(IndexError::Inconsistent(format!(
                "manifest count {} but {} vectors stored",
                manifest.count,
                vectors.len()
            )));
        }
        if manifest.dim != vectors.dim() {
            return Err(IndexError::Inconsistent(format!(
                "manifest dim {} but vectors have dim {}",
                manifest.dim,
                vectors.dim()
            )));
        }
        if manifest.max_phrase_len != keyword.max_phrase_len {
            return Err(IndexError::Inconsistent(
                "manifest max_phrase_len disagrees with keyword index".into(),
            ));
        }
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            if by_id.insert(doc.id.clone(), i).is_some() {
                return Err(IndexError::DuplicateId(doc.id.clone()));
            }
        }
        let known = |id: &DocId| {
            if by_id.contains_key(id) {
                Ok(())
            } else {
                Err(IndexError::UnknownDocument(id.clone()))
            }
        };
        for ids in keyword.entries.values() {
            ids.iter().try_for_each(known)?;
        }
        vectors.ids().iter().try_for_each(known)?;
        let mut seen = std::collections::HashSet::with_capacity(vectors.len());
        if let Some(dup) = vectors.ids().iter().find(|id| !seen.insert(*id)) {
            return Err(IndexError::DuplicateId(dup.clone()));
        }
        Ok(Self {
            manifest,
            keyword,
            vectors,
            docs,
            by_id,
        })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc(&self, id: &DocId) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }
}

/// Build both indexes over `docs`.
pub fn build_index(
    docs: Vec<Document>,
    embedder: &dyn Embedder,
    batch_size: usize,
    cache: Option<&EmbeddingCache>,
    created_at: impl Into<String>,
) -> Result<(IndexBundle, BuildStats)> {
    let keyword = build_keyword_index(&docs);
    let (vectors, stats) = build_vector_index(&docs, embedder, batch_size, cache)?;
    Ok((IndexBundle::new(docs, keyword, vectors, created_at)?, stats))
}
