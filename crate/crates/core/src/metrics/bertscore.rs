use crate::backends::{unit_normalize, Embedder};

use super::{MetricError, Prf, Result};

/// Greedy-matching BERTScore over token vectors, without IDF weighting or
/// baseline rescaling.
pub fn bertscore(hyp: &[String], reference: &[String], embedder: &dyn Embedder) -> Result<Prf> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptySide);
    }
    let hv = embedder.embed_tokens(hyp)?;
    let rv = embedder.embed_tokens(reference)?;
    let hv: Vec<&[f32]> = hv.iter().map(Vec::as_slice).collect();
    let rv: Vec<&[f32]> = rv.iter().map(Vec::as_slice).collect();
    bertscore_from_vectors(&hv, &rv)
}

/// Vectors need not be unit length; they are normalized here.
pub fn bertscore_from_vectors(hyp: &[&[f32]], reference: &[&[f32]]) -> Result<Prf> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptySide);
    }
    let unit = |vs: &[&[f32]]| -> Result<Vec<Vec<f32>>> {
        vs.iter()
            .map(|v| unit_normalize(v).ok_or(MetricError::ZeroVector))
            .collect()
    };
    let h = unit(hyp)?;
    let r = unit(reference)?;
    let sim: Vec<Vec<f64>> = h
        .iter()
        .map(|a| {
            r.iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum())
                .collect()
        })
        .collect();

    let p = sim
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / h.len() as f64;
    let r_score = (0..r.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / r.len() as f64;
    let f = if p + r_score == 0.0 {
        0.0
    } else {
        2.0 * p * r_score / (p + r_score)
    };
    Ok(Prf { p, r: r_score, f })
}
