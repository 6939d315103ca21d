use std::collections::HashMap;

use super::{MetricError, Result};

/// Precision substituted for an n-gram order with no clipped matches.
pub const BLEU_EPSILON: f64 = 1e-9;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Corpus BLEU over `(hypothesis, reference)` token pairs.
///
/// Clipped n-gram matches and candidate counts are pooled over the corpus.
/// Orders with no candidate n-grams are skipped; an order with zero clipped
/// matches contributes [`BLEU_EPSILON`]. Brevity penalty uses pooled lengths.
pub fn bleu(pairs: &[(Vec<String>, Vec<String>)], max_order: usize) -> Result<f64> {
    if let Some(i) = pairs.iter().position(|(_, r)| r.is_empty()) {
        return Err(MetricError::EmptyReference(i));
    }
    let hyp_len: usize = pairs.iter().map(|(h, _)| h.len()).sum();
    let ref_len: usize = pairs.iter().map(|(_, r)| r.len()).sum();
    if hyp_len == 0 {
        return Ok(0.0);
    }

    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=max_order {
        let mut matched = 0usize;
        let mut candidates = 0usize;
        for (hyp, reference) in pairs {
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in ngram_counts(hyp, n) {
                candidates += count;
                matched += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
        }
        if candidates == 0 {
            continue;
        }
        let precision = if matched == 0 {
            BLEU_EPSILON
        } else {
            matched as f64 / candidates as f64
        };
        log_sum += precision.ln();
        orders += 1;
    }

    let (c, r) = (hyp_len as f64, ref_len as f64);
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(brevity * (log_sum / orders as f64).exp())
}
