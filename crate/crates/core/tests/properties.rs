use std::collections::BTreeMap;

use lexrag_core::backends::{CallCounter, MockEmbedder};
use lexrag_core::corpus::{to_documents, DictionaryEntry, DocId, DocKind, ParallelExample};
use lexrag_core::index::{
    build_index, build_keyword_index, encode_vectors, load_index, normalize_keyword, save_index,
    vector_topk, VectorIndex,
};
use lexrag_core::metrics::{
    bertscore, bleu, human_eval_normalize, rouge_l, HumanScoreRow, HumanScoreSheet,
};
use lexrag_core::retrieval::{retrieve, Provenance, RetrievalConfig, RetrievalPolicy};
use proptest::prelude::*;

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "ᎠᎹ", "ᏅᏓ"]), 0..12)
        .prop_map(|v| v.into_iter().map(str::to_owned).collect())
}

fn nonempty_sentence() -> impl Strategy<Value = Vec<String>> {
    sentence().prop_filter("non-empty", |s| !s.is_empty())
}

fn unit_rows(dim: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f32>>> {
    prop::collection::vec(prop::collection::vec(-1.0f32..1.0, dim), n)
        .prop_filter_map("zero row", |rows| {
            rows.into_iter()
                .map(|r| lexrag_core::backends::unit_normalize(&r))
                .collect::<Option<Vec<_>>>()
        })
}

/// Independent oracle: score every row, full sort, truncate.
fn brute_force(index: &VectorIndex, q: &[f32], k: usize) -> Vec<(DocId, f64)> {
    let mut all: Vec<(DocId, f64)> = index
        .rows()
        .map(|(id, v)| {
            let s: f64 = v.iter().zip(q).map(|(a, b)| *a as f64 * *b as f64).sum();
            (id.clone(), s)
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bleu_and_rouge_identity(xs in prop::collection::vec(nonempty_sentence(), 1..6)) {
        let pairs: Vec<_> = xs.iter().map(|x| (x.clone(), x.clone())).collect();
        prop_assert!((bleu(&pairs, 4).unwrap() - 1.0).abs() < 1e-12);
        for x in &xs {
            let s = rouge_l(x, x, 1.0);
            prop_assert_eq!((s.p, s.r, s.f), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn metric_ranges(h in sentence(), r in nonempty_sentence()) {
        let b = bleu(&[(h.clone(), r.clone())], 4).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        let s = rouge_l(&h, &r, 1.0);
        for v in [s.p, s.r, s.f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if s.p == 0.0 && s.r == 0.0 {
            prop_assert_eq!(s.f, 0.0);
        }
    }

    #[test]
    fn rouge_swap_symmetry(h in sentence(), r in sentence()) {
        let a = rouge_l(&h, &r, 1.0);
        let b = rouge_l(&r, &h, 1.0);
        prop_assert_eq!(a.p, b.r);
        prop_assert_eq!(a.r, b.p);
        prop_assert!((a.f - b.f).abs() < 1e-12);
    }

    #[test]
    fn bertscore_role_symmetry(h in nonempty_sentence(), r in nonempty_sentence()) {
        let e = MockEmbedder::new(16);
        let a = bertscore(&h, &r, &e).unwrap();
        let b = bertscore(&r, &h, &e).unwrap();
        prop_assert_eq!(a.p, b.r);
        prop_assert_eq!(a.r, b.p);
        prop_assert!((a.f - b.f).abs() < 1e-12);
        for v in [a.p, a.r] {
            prop_assert!((-1.0 - 1e-6..=1.0 + 1e-6).contains(&v));
        }
        // The harmonic mean is only bounded when both sides share a sign.
        if a.p >= 0.0 && a.r >= 0.0 {
            prop_assert!((0.0..=1.0 + 1e-6).contains(&a.f));
        }
    }

    #[test]
    fn bleu_permutation_invariant(
        pairs in prop::collection::vec((sentence(), nonempty_sentence()), 1..6),
        seed in any::<u64>(),
    ) {
        let mut shuffled = pairs.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        shuffled.reverse();
        let a = bleu(&pairs, 4).unwrap();
        let b = bleu(&shuffled, 4).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn human_eval_monotone(
        scores in prop::collection::vec((0u32..=5, 0u32..=5, 0u32..=5), 1..6),
        which in 0usize..3,
        row in any::<prop::sample::Index>(),
    ) {
        let sheet = |s: &[(u32, u32, u32)]| {
            HumanScoreSheet::new(
                s.iter().enumerate().map(|(i, x)| HumanScoreRow::new(&i.to_string(), "m", *x)).collect(),
            ).unwrap()
        };
        let before = human_eval_normalize(&sheet(&scores), "m").unwrap();
        let mut bumped = scores.clone();
        let i = row.index(bumped.len());
        let slot = match which { 0 => &mut bumped[i].0, 1 => &mut bumped[i].1, _ => &mut bumped[i].2 };
        *slot = (*slot + 1).min(5);
        let after = human_eval_normalize(&sheet(&bumped), "m").unwrap();
        prop_assert!(after >= before);
        prop_assert!((0.0..=1.0).contains(&after));
    }

    #[test]
    fn topk_matches_brute_force(
        rows in (1usize..120).prop_flat_map(|n| unit_rows(8, n)),
        q in unit_rows(8, 1),
        k in 0usize..20,
    ) {
        let mut index = VectorIndex::new(8, "p");
        for (i, r) in rows.iter().enumerate() {
            index.push(DocId::dictionary(i), r).unwrap();
        }
        let got = vector_topk(&index, &q[0], k).unwrap();
        let want = brute_force(&index, &q[0], k);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!(&g.0, &w.0);
            prop_assert!((g.1 - w.1).abs() < 1e-6);
            prop_assert!(g.1 <= 1.0 + 1e-6 && g.1 >= -1.0 - 1e-6);
        }
    }

    #[test]
    fn self_query_ranks_first(rows in (1usize..60).prop_flat_map(|n| unit_rows(16, n)), pick in any::<prop::sample::Index>()) {
        let mut index = VectorIndex::new(16, "p");
        for (i, r) in rows.iter().enumerate() {
            index.push(DocId::dictionary(i), r).unwrap();
        }
        let i = pick.index(rows.len());
        let top = vector_topk(&index, &rows[i], 1).unwrap();
        prop_assert!(top[0].1 >= 1.0 - 1e-6);
    }

    #[test]
    fn keyword_lookup_finds_every_headword(
        heads in prop::collection::vec("[A-Za-z]{1,6}( [A-Za-z]{1,6}){0,2}[.,!]?", 1..15),
    ) {
        let entries: Vec<_> = heads.iter().map(|h| DictionaryEntry::new(h.as_str(), "t")).collect();
        let docs = to_documents(&entries, &[]).unwrap();
        let index = build_keyword_index(&docs);
        for doc in &docs {
            let hits = index.lookup(&doc.source_text);
            prop_assert!(hits.contains(&doc.id));
            prop_assert!(hits.windows(2).all(|w| w[0] < w[1]));
        }
        for key in index.entries.keys() {
            prop_assert_eq!(&normalize_keyword(key), key);
        }
    }

    #[test]
    fn document_ids_well_formed(n_entries in 0usize..20, n_examples in 0usize..20) {
        prop_assume!(n_entries + n_examples > 0);
        let entries: Vec<_> = (0..n_entries).map(|i| DictionaryEntry::new(format!("w{i}"), "t")).collect();
        let examples: Vec<_> = (0..n_examples)
            .map(|i| ParallelExample {
                source_text: format!("s{i}"),
                target_text: "t".into(),
                source_lang: "en".into(),
                target_lang: "chr".into(),
                provenance: String::new(),
            })
            .collect();
        let docs = to_documents(&entries, &examples).unwrap();
        let mut seen = std::collections::HashSet::new();
        for d in &docs {
            prop_assert!(d.id.is_well_formed());
            prop_assert!(seen.insert(d.id.clone()));
            prop_assert_eq!(d.kind == DocKind::Dictionary, d.id.as_str().starts_with("d:"));
        }
    }
}

fn corpus(n: usize) -> Vec<lexrag_core::Document> {
    let words = ["water", "sun", "fire", "moon", "river", "mountain lion", "house", "tree"];
    let entries: Vec<_> = (0..n)
        .map(|i| DictionaryEntry::new(words[i % words.len()], format!("T{i}")))
        .collect();
    to_documents(&entries, &[]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retrieval_invariants(
        query in "[a-z]{2,6}( [a-z]{2,6}){0,4}",
        k_vector in 1usize..5,
        extra in 0usize..4,
        fill in any::<bool>(),
    ) {
        let (index, _) = build_index(corpus(12), &MockEmbedder::new(8), 4, None, "t").unwrap();
        let config = RetrievalConfig {
            k_vector,
            k_total: k_vector + extra,
            policy: if fill { RetrievalPolicy::Fill } else { RetrievalPolicy::StrictFallback },
            ..Default::default()
        };
        let e = CallCounter::new(MockEmbedder::new(8));
        let res = retrieve(&query, &index, &e, &config).unwrap();
        prop_assert!(res.len() <= config.k_total);
        let ids: std::collections::HashSet<_> = res.iter().map(|r| &r.doc.id).collect();
        prop_assert_eq!(ids.len(), res.len());
        for r in &res {
            prop_assert_eq!(r.matched_phrase.is_some(), r.provenance == Provenance::Keyword);
            prop_assert!(r.score <= 1.0 + 1e-6 && r.score >= -1.0 - 1e-6);
        }
        let keyword_hits = res.iter().filter(|r| r.provenance == Provenance::Keyword).count();
        if !fill && keyword_hits > 0 {
            prop_assert_eq!(keyword_hits, res.len());
            prop_assert_eq!(e.calls(), 0);
        }
        let again = retrieve(&query, &index, &e, &config).unwrap();
        prop_assert_eq!(res, again);
    }
}

#[test]
fn persistence_is_bit_exact() {
    let (index, _) = build_index(corpus(30), &MockEmbedder::new(64), 7, None, "2026-10-17T00:00:00Z").unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    save_index(&index, a.path()).unwrap();
    let loaded = load_index(a.path()).unwrap();
    save_index(&loaded, b.path()).unwrap();
    assert_eq!(loaded, index);
    for file in ["vectors.bin", "manifest.json", "keyword_index.json", "docs.jsonl"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    assert_eq!(encode_vectors(&loaded.vectors), std::fs::read(a.path().join("vectors.bin")).unwrap());
}

#[test]
fn keyword_index_json_shape() {
    let (index, _) = build_index(corpus(3), &MockEmbedder::new(4), 7, None, "t").unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_index(&index, dir.path()).unwrap();
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_slice(&std::fs::read(dir.path().join("keyword_index.json")).unwrap()).unwrap();
    assert_eq!(raw["water"], ["d:0"]);
}
