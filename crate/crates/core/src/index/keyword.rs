use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::corpus::{DocId, DocKind, Document, MAX_PHRASE_LEN};

/// Exact-match mapping from normalized phrases to document ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordIndex {
    pub entries: BTreeMap<String, Vec<DocId>>,
    pub max_phrase_len: usize,
}

impl KeywordIndex {
    /// Ids indexed under `normalize_keyword(phrase)`; empty on a miss.
    pub fn lookup(&self, phrase: &str) -> &[DocId] {
        self.entries
            .get(&normalize_keyword(phrase))
            .map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

/// NFC, Unicode case folding, per-word edge punctuation stripped, whitespace
/// collapsed.
///
/// Full case folding (not lowercasing) matters for Cherokee: folding maps the
/// syllabary to its uppercase block, so ordinary syllabary text is unchanged.
pub fn normalize_keyword(text: &str) -> String {
    let composed: String = text.nfc().collect();
    let folded: String = caseless::default_case_fold_str(&composed).nfc().collect();
    folded
        .split_whitespace()
        .map(|w| w.trim_matches(is_punctuation))
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Dictionary headwords are indexed as whole phrases; example sentences
/// contribute their source-side unigrams.
pub fn build_keyword_index(docs: &[Document]) -> KeywordIndex {
    let mut entries: BTreeMap<String, Vec<DocId>> = BTreeMap::new();
    let mut longest = 1;
    for doc in docs {
        let normalized = normalize_keyword(&doc.source_text);
        if normalized.is_empty() {
            continue;
        }
        match doc.kind {
            DocKind::Dictionary => {
                longest = longest.max(normalized.split(' ').count());
                entries.entry(normalized).or_default().push(doc.id.clone());
            }
            DocKind::Example => {
                for word in normalized.split(' ') {
                    entries.entry(word.to_owned()).or_default().push(doc.id.clone());
                }
            }
        }
    }
    for ids in entries.values_mut() {
        ids.sort();
        ids.dedup();
    }
    KeywordIndex {
        entries,
        max_phrase_len: longest.min(MAX_PHRASE_LEN),
    }
}
