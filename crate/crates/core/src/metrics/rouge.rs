use super::Prf;

/// Longest common subsequence length, two-row dynamic programme.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence ROUGE-L. Empty hypothesis or reference scores (0, 0, 0).
pub fn rouge_l<T: PartialEq>(hyp: &[T], reference: &[T], beta: f64) -> Prf {
    if hyp.is_empty() || reference.is_empty() {
        return Prf::default();
    }
    let l = lcs_len(hyp, reference) as f64;
    let p = l / hyp.len() as f64;
    let r = l / reference.len() as f64;
    let b2 = beta * beta;
    let denom = r + b2 * p;
    let f = if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / denom
    };
    Prf { p, r, f }
}
