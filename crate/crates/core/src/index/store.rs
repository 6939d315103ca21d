//! Index directory persistence.
//!
//! `vectors.bin`, all integers little-endian:
//!
//! ```text
//! magic    b"LRXV"   4 bytes
//! version  u32       = 1
//! dim      u32
//! count    u64
//! count × { id_len u16, id UTF-8 bytes, dim × f32 }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::corpus::{read_documents, write_documents, DocId};

use super::{IndexBundle, IndexError, IndexManifest, KeywordIndex, Result, VectorIndex, MANIFEST_VERSION};

pub const VECTORS_MAGIC: [u8; 4] = *b"LRXV";
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const KEYWORD_FILE: &str = "keyword_index.json";
pub const DOCS_FILE: &str = "docs.jsonl";
pub const VECTORS_FILE: &str = "vectors.bin";

pub fn encode_vectors(index: &VectorIndex) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + index.len() * (8 + 4 * index.dim()));
    out.extend_from_slice(&VECTORS_MAGIC);
    out.extend_from_slice(&MANIFEST_VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for (id, v) in index.rows() {
        let bytes = id.as_str().as_bytes();
        out.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
        out.extend_from_slice(bytes);
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(IndexError::Truncated(format!(
                "need {n} bytes for {what} at offset {}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Decode `vectors.bin`. The embedder id lives in the manifest, so the
/// returned index carries `embedder_id` as given.
pub fn decode_vectors(bytes: &[u8], embedder_id: &str) -> Result<VectorIndex> {
    if bytes.len() < 4 {
        return Err(IndexError::Truncated("file shorter than magic".into()));
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != VECTORS_MAGIC {
        return Err(IndexError::BadMagic { found });
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let version = r.u32("version")?;
    if version != MANIFEST_VERSION {
        return Err(IndexError::UnsupportedVersion(version));
    }
    let dim = r.u32("dim")? as usize;
    let count = r.u64("count")?;
    let mut index = VectorIndex::new(dim, embedder_id);
    for i in 0..count {
        if r.remaining() == 0 {
            return Err(IndexError::Inconsistent(format!(
                "header declares {count} records but payload holds {i}"
            )));
        }
        let id_len = r.u16("id length")? as usize;
        let id = std::str::from_utf8(r.take(id_len, "id")?)
            .map_err(|_| IndexError::Inconsistent(format!("record {i}: id is not UTF-8")))?;
        let raw = r.take(dim * 4, "vector")?;
        let v: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        index.push(DocId::new(id), &v)?;
    }
    if r.remaining() != 0 {
        return Err(IndexError::Inconsistent(format!(
            "{} trailing bytes after {count} records",
            r.remaining()
        )));
    }
    Ok(index)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| IndexError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| IndexError::Io {
        path: path.to_owned(),
        source,
    })
}

fn to_json_pretty<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("index metadata serializes");
    v.push(b'\n');
    v
}

/// Write all four index files into `dir`, creating it if needed.
pub fn save_index(bundle: &IndexBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| IndexError::Io {
        path: dir.to_owned(),
        source,
    })?;
    write_file(&dir.join(MANIFEST_FILE), &to_json_pretty(&bundle.manifest))?;
    write_file(&dir.join(KEYWORD_FILE), &to_json_pretty(&bundle.keyword.entries))?;
    let docs_path = dir.join(DOCS_FILE);
    let file = fs::File::create(&docs_path).map_err(|source| IndexError::Io {
        path: docs_path.clone(),
        source,
    })?;
    write_documents(BufWriter::new(file), bundle.docs()).map_err(|source| IndexError::Io {
        path: docs_path,
        source,
    })?;
    write_file(&dir.join(VECTORS_FILE), &encode_vectors(&bundle.vectors))
}

pub fn load_index(dir: &Path) -> Result<IndexBundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: IndexManifest = serde_json::from_slice(&read_file(&manifest_path)?)
        .map_err(|e| IndexError::Json {
            path: manifest_path,
            message: e.to_string(),
        })?;
    if manifest.version != MANIFEST_VERSION {
        return Err(IndexError::UnsupportedVersion(manifest.version));
    }
    let vectors = decode_vectors(&read_file(&dir.join(VECTORS_FILE))?, &manifest.embedder_id)?;
    let keyword_path = dir.join(KEYWORD_FILE);
    let entries: BTreeMap<String, Vec<DocId>> =
        serde_json::from_slice(&read_file(&keyword_path)?).map_err(|e| IndexError::Json {
            path: keyword_path,
            message: e.to_string(),
        })?;
    let keyword = KeywordIndex {
        entries,
        max_phrase_len: manifest.max_phrase_len,
    };
    let docs = read_documents(&dir.join(DOCS_FILE))?;
    IndexBundle::from_parts(manifest, docs, keyword, vectors)
}
