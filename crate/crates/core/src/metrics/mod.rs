//! Translation quality metrics.
//!
//! Machine metrics work on token lists produced by [`tokenize`]. The corpus
//! level numbers in a [`MetricReport`] are: BLEU over pooled n-gram counts,
//! and arithmetic means of per-sentence ROUGE-L and BERTScore values.

mod bertscore;
mod bleu;
mod human;
mod rouge;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, Embedder};

pub use bertscore::{bertscore, bertscore_from_vectors};
pub use bleu::{bleu, BLEU_EPSILON};
pub use human::{human_eval_normalize, HumanEvalError, HumanScoreRow, HumanScoreSheet, MAX_SCORE};
pub use rouge::{lcs_len, rouge_l};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("reference {0} is empty")]
    EmptyReference(usize),
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("no sentence pairs")]
    Empty,
    #[error("BERTScore needs non-empty hypothesis and reference")]
    EmptySide,
    #[error("token embedding failed: {0}")]
    Backend(#[from] BackendError),
    #[error("token embedder returned a zero vector")]
    ZeroVector,
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizationPolicy {
    #[default]
    Whitespace,
    /// One token per non-whitespace Unicode scalar value.
    Codepoint,
}

pub fn tokenize(text: &str, policy: TokenizationPolicy) -> Vec<String> {
    match policy {
        TokenizationPolicy::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
        TokenizationPolicy::Codepoint => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}

/// Precision, recall and F-measure.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub p: f64,
    pub r: f64,
    pub f: f64,
}

/// One row of a results table. Every metric is optional so that reports for
/// different metric subsets (or human scores alone) can be merged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rouge_l_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rouge_l_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rouge_l_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bert_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bert_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bert_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_eval: Option<f64>,
    #[serde(default)]
    pub n_sentences: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Score aligned hypothesis/reference sentences. BERTScore is computed only
/// when a token embedder is supplied; pairs with an empty side score 0 there.
pub fn evaluate_set(
    hyps: &[String],
    refs: &[String],
    policy: TokenizationPolicy,
    token_embedder: Option<&dyn Embedder>,
) -> Result<MetricReport> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(MetricError::Empty);
    }
    let pairs: Vec<(Vec<String>, Vec<String>)> = hyps
        .iter()
        .zip(refs)
        .map(|(h, r)| (tokenize(h, policy), tokenize(r, policy)))
        .collect();

    let rouge: Vec<Prf> = pairs.iter().map(|(h, r)| rouge_l(h, r, 1.0)).collect();
    let mut report = MetricReport {
        bleu: Some(bleu(&pairs, 4)?),
        rouge_l_p: Some(mean(rouge.iter().map(|x| x.p))),
        rouge_l_r: Some(mean(rouge.iter().map(|x| x.r))),
        rouge_l_f: Some(mean(rouge.iter().map(|x| x.f))),
        n_sentences: pairs.len(),
        ..Default::default()
    };

    if let Some(embedder) = token_embedder {
        let mut vocab: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for tok in pairs.iter().flat_map(|(h, r)| h.iter().chain(r)) {
            if seen.insert(tok.as_str()) {
                vocab.push(tok.clone());
            }
        }
        let mut table: HashMap<&str, Vec<f32>> = HashMap::with_capacity(vocab.len());
        for chunk in vocab.chunks(256) {
            let vectors = embedder.embed_tokens(chunk)?;
            if vectors.len() != chunk.len() {
                return Err(MetricError::Backend(BackendError::Provider(format!(
                    "expected {} token vectors, got {}",
                    chunk.len(),
                    vectors.len()
                ))));
            }
            for (tok, v) in chunk.iter().zip(vectors) {
                table.insert(tok.as_str(), v);
            }
        }
        let mut scores = Vec::with_capacity(pairs.len());
        for (h, r) in &pairs {
            if h.is_empty() || r.is_empty() {
                scores.push(Prf::default());
                continue;
            }
            let hv: Vec<&[f32]> = h.iter().map(|t| table[t.as_str()].as_slice()).collect();
            let rv: Vec<&[f32]> = r.iter().map(|t| table[t.as_str()].as_slice()).collect();
            scores.push(bertscore_from_vectors(&hv, &rv)?);
        }
        report.bert_p = Some(mean(scores.iter().map(|x| x.p)));
        report.bert_r = Some(mean(scores.iter().map(|x| x.r)));
        report.bert_f1 = Some(mean(scores.iter().map(|x| x.f)));
    }
    Ok(report)
}
