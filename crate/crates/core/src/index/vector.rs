use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::backends::{unit_normalize, Embedder};
use crate::corpus::{DocId, Document};

use super::{EmbeddingCache, IndexError, Result};

/// Maximum allowed deviation of a stored or query vector's norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-4;

/// Unit vectors in document order, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    embedder_id: String,
    ids: Vec<DocId>,
    data: Vec<f32>,
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|x| f64::from(*x) * f64::from(*x)).sum::<f64>().sqrt()
}

impl VectorIndex {
    pub fn new(dim: usize, embedder_id: impl Into<String>) -> Self {
        Self {
            dim,
            embedder_id: embedder_id.into(),
            ids: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Append a row. The vector must already be unit length; id uniqueness
    /// is checked when the index is assembled into an [`super::IndexBundle`].
    pub fn push(&mut self, id: DocId, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        let n = norm(vector);
        if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(IndexError::NotUnit {
                id: id.to_string(),
                norm: n,
            });
        }
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[DocId] {
        &self.ids
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&DocId, &[f32])> + '_ {
        self.ids.iter().zip(self.data.chunks_exact(self.dim.max(1)))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Requests sent to the embedding backend.
    pub backend_calls: usize,
    /// Documents whose vector came from the cache.
    pub cache_hits: usize,
    /// Distinct texts embedded by the backend.
    pub embedded: usize,
}

/// Embed every document's `render_text` and store it unit-normalized.
///
/// Texts already in `cache` under the embedder's id are not sent to the
/// backend; fresh vectors are appended to the cache.
pub fn build_vector_index(
    docs: &[Document],
    embedder: &dyn Embedder,
    batch_size: usize,
    cache: Option<&EmbeddingCache>,
) -> Result<(VectorIndex, BuildStats)> {
    let embedder_id = embedder.embedder_id();
    let mut stats = BuildStats::default();
    let mut raw: HashMap<&str, Vec<f32>> = HashMap::new();
    let mut misses: Vec<&str> = Vec::new();
    let mut queued = HashSet::new();

    for doc in docs {
        let text = doc.render_text.as_str();
        if let Some(v) = cache.and_then(|c| c.get(&embedder_id, text)) {
            stats.cache_hits += 1;
            raw.insert(text, v);
        } else if queued.insert(text) {
            misses.push(text);
        }
    }

    let mut dim = raw.values().next().map(Vec::len);
    for batch in misses.chunks(batch_size.max(1)) {
        let owned: Vec<String> = batch.iter().map(|s| s.to_string()).collect();
        let vectors = embedder.embed_texts(&owned)?;
        stats.backend_calls += 1;
        if vectors.len() != batch.len() {
            return Err(IndexError::Inconsistent(format!(
                "embedder returned {} vectors for {} texts",
                vectors.len(),
                batch.len()
            )));
        }
        for (text, v) in batch.iter().zip(vectors) {
            let expected = *dim.get_or_insert(v.len());
            if v.len() != expected {
                return Err(IndexError::DimensionMismatch {
                    expected,
                    got: v.len(),
                });
            }
            if let Some(c) = cache {
                if unit_normalize(&v).is_some() {
                    c.put(&embedder_id, text, &v)?;
                }
            }
            stats.embedded += 1;
            raw.insert(text, v);
        }
    }

    let dim = dim.unwrap_or(0);
    let mut index = VectorIndex::new(dim, embedder_id);
    for doc in docs {
        let v = &raw[doc.render_text.as_str()];
        if v.len() != dim {
            return Err(IndexError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        let unit = unit_normalize(v).ok_or_else(|| IndexError::ZeroVector { id: doc.id.clone() })?;
        index.push(doc.id.clone(), &unit)?;
    }
    Ok((index, stats))
}

struct Candidate<'a> {
    score: f64,
    id: &'a DocId,
}

// Greater means better: higher score, then smaller id.
impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id.cmp(self.id))
    }
}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

/// Exact cosine top-K: dot products against every row, best `k` kept in a
/// bounded heap. Sorted by score descending, ties by ascending id.
pub fn vector_topk(index: &VectorIndex, query: &[f32], k: usize) -> Result<Vec<(DocId, f64)>> {
    if query.len() != index.dim() {
        return Err(IndexError::DimensionMismatch {
            expected: index.dim(),
            got: query.len(),
        });
    }
    let n = norm(query);
    if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(IndexError::NotUnit {
            id: "query".into(),
            norm: n,
        });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
    for (id, row) in index.rows() {
        let score: f64 = row
            .iter()
            .zip(query)
            .map(|(a, b)| f64::from(*a) * f64::from(*b))
            .sum();
        let cand = Candidate { score, id };
        if heap.len() < k {
            heap.push(Reverse(cand));
        } else if heap.peek().is_some_and(|worst| cand > worst.0) {
            heap.pop();
            heap.push(Reverse(cand));
        }
    }
    let mut out: Vec<Candidate> = heap.into_iter().map(|r| r.0).collect();
    out.sort_by(|a, b| b.cmp(a));
    Ok(out.into_iter().map(|c| (c.id.clone(), c.score)).collect())
}
