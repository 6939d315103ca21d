//! Corpus ingestion: bilingual dictionaries and parallel sentences.
//!
//! All text is NFC-normalized and trimmed when it is loaded. Dictionary
//! entries and parallel examples are then flattened into [`Document`]s, the
//! unit that both indexes store.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Longest headword (in words) the keyword index will accept.
pub const MAX_PHRASE_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: {message}")]
    Invariant {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("document {id}: {message}")]
    InvalidDocument { id: String, message: String },
    #[error("no dictionary entries or parallel examples to index")]
    Empty,
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub headword: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part_of_speech: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<(String, String)>,
}

impl DictionaryEntry {
    pub fn new(headword: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            headword: headword.into(),
            target: target.into(),
            definition: None,
            part_of_speech: None,
            examples: Vec::new(),
        }
    }

    pub fn with_definition(mut self, definition: impl Into<String>) -> Self {
        self.definition = Some(definition.into());
        self
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.headword.is_empty() {
            return Err("invariant violated: headword must be non-empty".into());
        }
        if self.target.is_empty() {
            return Err("invariant violated: target must be non-empty".into());
        }
        let words = self.headword.split_whitespace().count();
        if words > MAX_PHRASE_LEN {
            return Err(format!(
                "invariant violated: headword has {words} words, at most {MAX_PHRASE_LEN} allowed"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelExample {
    pub source_text: String,
    pub target_text: String,
    pub source_lang: String,
    pub target_lang: String,
    #[serde(default)]
    pub provenance: String,
}

impl ParallelExample {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.source_text.is_empty() {
            return Err("invariant violated: source_text must be non-empty".into());
        }
        if self.target_text.is_empty() {
            return Err("invariant violated: target_text must be non-empty".into());
        }
        if self.source_lang.is_empty() || self.target_lang.is_empty() {
            return Err("invariant violated: language codes must be non-empty".into());
        }
        Ok(())
    }
}

/// Document identifier, `d:<seq>` for dictionary entries and `x:<seq>` for
/// parallel examples.
///
/// Ordering is natural rather than lexicographic: `d:2 < d:10`, and all
/// `d:` ids sort before `x:` ids. Ids that do not follow the scheme sort
/// after well-formed ones, by string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(String);

impl DocId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn dictionary(seq: usize) -> Self {
        Self(format!("d:{seq}"))
    }

    pub fn example(seq: usize) -> Self {
        Self(format!("x:{seq}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the id matches `^[dx]:[0-9]+$`.
    pub fn is_well_formed(&self) -> bool {
        self.parts().is_some()
    }

    fn parts(&self) -> Option<(u8, u64)> {
        let bytes = self.0.as_bytes();
        if bytes.len() < 3 || !matches!(bytes[0], b'd' | b'x') || bytes[1] != b':' {
            return None;
        }
        let digits = &self.0[2..];
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().map(|n| (bytes[0], n))
    }
}

impl Ord for DocId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.parts(), other.parts()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for DocId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DocId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Dictionary,
    Example,
}

/// A retrievable unit. `render_text` is what gets embedded and what the
/// prompt shows; it is always re-derivable from the other fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    pub kind: DocKind,
    pub source_text: String,
    pub target_text: String,
    pub render_text: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Document {
    pub fn from_entry(seq: usize, entry: &DictionaryEntry) -> Self {
        let mut metadata = BTreeMap::new();
        if let Some(def) = &entry.definition {
            metadata.insert("definition".to_owned(), def.clone());
        }
        if let Some(pos) = &entry.part_of_speech {
            metadata.insert("part_of_speech".to_owned(), pos.clone());
        }
        if !entry.examples.is_empty() {
            let encoded = serde_json::to_string(&entry.examples).expect("string pairs serialize");
            metadata.insert("examples".to_owned(), encoded);
        }
        let mut doc = Self {
            id: DocId::dictionary(seq),
            kind: DocKind::Dictionary,
            source_text: entry.headword.clone(),
            target_text: entry.target.clone(),
            render_text: String::new(),
            metadata,
        };
        doc.render_text = doc.derive_render_text();
        doc
    }

    pub fn from_example(seq: usize, example: &ParallelExample) -> Self {
        let metadata = BTreeMap::from([
            ("source_lang".to_owned(), example.source_lang.clone()),
            ("target_lang".to_owned(), example.target_lang.clone()),
            ("provenance".to_owned(), example.provenance.clone()),
        ]);
        let mut doc = Self {
            id: DocId::example(seq),
            kind: DocKind::Example,
            source_text: example.source_text.clone(),
            target_text: example.target_text.clone(),
            render_text: String::new(),
            metadata,
        };
        doc.render_text = doc.derive_render_text();
        doc
    }

    /// `headword — target — definition` for dictionary documents (absent
    /// parts omitted), `source ⇒ target` for examples.
    pub fn derive_render_text(&self) -> String {
        match self.kind {
            DocKind::Dictionary => {
                let mut parts = vec![self.source_text.as_str(), self.target_text.as_str()];
                if let Some(def) = self.metadata.get("definition").filter(|d| !d.is_empty()) {
                    parts.push(def);
                }
                parts
                    .into_iter()
                    .filter(|p| !p.is_empty())
                    .collect::<Vec<_>>()
                    .join(" — ")
            }
            DocKind::Example => format!("{} ⇒ {}", self.source_text, self.target_text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: &str| CorpusError::InvalidDocument {
            id: self.id.to_string(),
            message: message.to_owned(),
        };
        if self.render_text.is_empty() {
            return Err(fail("render_text is empty"));
        }
        if self.render_text != self.derive_render_text() {
            return Err(fail("render_text does not match its fields"));
        }
        Ok(())
    }
}

fn nfc(s: &str) -> String {
    s.trim().nfc().collect()
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line));
    }
    if out.is_empty() {
        log::warn!("{} contains no records", path.display());
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RawEntry {
    headword: Option<String>,
    target: Option<String>,
    definition: Option<String>,
    part_of_speech: Option<String>,
    #[serde(default)]
    examples: Vec<(String, String)>,
}

/// Load a JSONL dictionary, one entry per non-blank line.
pub fn load_dictionary(path: &Path) -> Result<Vec<DictionaryEntry>> {
    let mut entries = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let raw: RawEntry =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: path.to_owned(),
                line: line_no,
                message: e.to_string(),
            })?;
        let opt = |s: Option<String>| s.map(|s| nfc(&s)).filter(|s| !s.is_empty());
        let entry = DictionaryEntry {
            headword: raw.headword.as_deref().map(nfc).unwrap_or_default(),
            target: raw.target.as_deref().map(nfc).unwrap_or_default(),
            definition: opt(raw.definition),
            part_of_speech: opt(raw.part_of_speech),
            examples: raw
                .examples
                .iter()
                .map(|(s, t)| (nfc(s), nfc(t)))
                .collect(),
        };
        entry.validate().map_err(|message| CorpusError::Invariant {
            path: path.to_owned(),
            line: line_no,
            message,
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParallelFormat {
    Jsonl,
    Tsv,
}

impl ParallelFormat {
    /// `.tsv` / `.tab` files are TSV, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => ParallelFormat::Tsv,
            _ => ParallelFormat::Jsonl,
        }
    }
}

#[derive(Deserialize)]
struct RawExample {
    source_text: Option<String>,
    target_text: Option<String>,
    source_lang: Option<String>,
    target_lang: Option<String>,
    provenance: Option<String>,
}

/// Load parallel examples. TSV columns: source_text, target_text,
/// source_lang, target_lang, provenance (the last may be empty or absent).
pub fn load_parallel(path: &Path, format: ParallelFormat) -> Result<Vec<ParallelExample>> {
    let mut examples = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let malformed = |message: String| CorpusError::Malformed {
            path: path.to_owned(),
            line: line_no,
            message,
        };
        let raw = match format {
            ParallelFormat::Jsonl => serde_json::from_str::<RawExample>(&line)
                .map_err(|e| malformed(e.to_string()))?,
            ParallelFormat::Tsv => {
                let cols: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
                if !(4..=5).contains(&cols.len()) {
                    return Err(malformed(format!(
                        "expected 4 or 5 tab-separated columns, found {}",
                        cols.len()
                    )));
                }
                RawExample {
                    source_text: Some(cols[0].to_owned()),
                    target_text: Some(cols[1].to_owned()),
                    source_lang: Some(cols[2].to_owned()),
                    target_lang: Some(cols[3].to_owned()),
                    provenance: cols.get(4).map(|s| s.to_string()),
                }
            }
        };
        let field = |s: &Option<String>| s.as_deref().map(nfc).unwrap_or_default();
        let example = ParallelExample {
            source_text: field(&raw.source_text),
            target_text: field(&raw.target_text),
            source_lang: field(&raw.source_lang),
            target_lang: field(&raw.target_lang),
            provenance: field(&raw.provenance),
        };
        example.validate().map_err(|message| CorpusError::Invariant {
            path: path.to_owned(),
            line: line_no,
            message,
        })?;
        examples.push(example);
    }
    Ok(examples)
}

/// Flatten entries and examples into documents: `d:0..` then `x:0..`.
pub fn to_documents(
    entries: &[DictionaryEntry],
    examples: &[ParallelExample],
) -> Result<Vec<Document>> {
    if entries.is_empty() && examples.is_empty() {
        return Err(CorpusError::Empty);
    }
    let docs: Vec<Document> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| Document::from_entry(i, e))
        .chain(
            examples
                .iter()
                .enumerate()
                .map(|(i, x)| Document::from_example(i, x)),
        )
        .collect();
    debug_assert_eq!(
        docs.iter().map(|d| &d.id).collect::<HashSet<_>>().len(),
        docs.len()
    );
    Ok(docs)
}

pub fn write_documents<W: Write>(mut w: W, docs: &[Document]) -> std::io::Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a `docs.jsonl` file, checking id uniqueness and render_text.
pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        doc.validate()?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::InvalidDocument {
                id: doc.id.to_string(),
                message: "duplicate id".into(),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}
