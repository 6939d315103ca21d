use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IndexError, Result};

/// Hex SHA-256 of `embedder_id ‖ 0x00 ‖ text`.
pub fn cache_key(embedder_id: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(embedder_id.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    dim: usize,
    vector: Vec<f32>,
}

/// Append-only embedding cache backed by a JSONL file.
///
/// Reads take a shared lock; appends are serialized through the file mutex.
#[derive(Debug)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, Vec<f32>>>,
    file: Mutex<Option<File>>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: RwLock::new(HashMap::new()),
            file: Mutex::new(None),
        }
    }

    /// Open (creating if needed) the cache file at `path`.
    pub fn open(path: &Path) -> Result<Self> {
        let io_err = |source| IndexError::Io {
            path: path.to_owned(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: CacheLine = serde_json::from_str(&line).map_err(|e| IndexError::Json {
                    path: path.to_owned(),
                    message: format!("line {}: {e}", i + 1),
                })?;
                if parsed.vector.len() != parsed.dim {
                    return Err(IndexError::Json {
                        path: path.to_owned(),
                        message: format!("line {}: dim {} but {} values", i + 1, parsed.dim, parsed.vector.len()),
                    });
                }
                entries.insert(parsed.key, parsed.vector);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        Ok(Self {
            path: Some(path.to_owned()),
            entries: RwLock::new(entries),
            file: Mutex::new(Some(file)),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, embedder_id: &str, text: &str) -> Option<Vec<f32>> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(&cache_key(embedder_id, text))
            .cloned()
    }

    pub fn put(&self, embedder_id: &str, text: &str, vector: &[f32]) -> Result<()> {
        let key = cache_key(embedder_id, text);
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        {
            let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
            if entries.contains_key(&key) {
                return Ok(());
            }
            entries.insert(key.clone(), vector.to_vec());
        }
        if let Some(f) = file.as_mut() {
            let line = CacheLine {
                key,
                dim: vector.len(),
                vector: vector.to_vec(),
            };
            let mut buf = serde_json::to_vec(&line).expect("cache line serializes");
            buf.push(b'\n');
            f.write_all(&buf).map_err(|source| IndexError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_separates_embedders() {
        assert_ne!(cache_key("a", "bc"), cache_key("ab", "c"));
        assert_eq!(cache_key("m", "water").len(), 64);
    }

    #[test]
    fn persists_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache/embeddings.jsonl");
        let v = vec![0.1f32, -0.33333334, 1.0e-7, 0.70710677];
        {
            let c = EmbeddingCache::open(&path).unwrap();
            c.put("m", "water", &v).unwrap();
            c.put("m", "water", &v).unwrap();
        }
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        let c = EmbeddingCache::open(&path).unwrap();
        let got = c.get("m", "water").unwrap();
        assert_eq!(
            got.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert!(c.get("other", "water").is_none());
    }
}
