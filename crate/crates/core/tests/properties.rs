use std::collections::HashSet;

use proptest::prelude::*;
use ragbench_core::eval::{
    average_precision, extract_number, mrr_at_k, ndcg_at_k, number_match, paired_bootstrap, recall_at_k, rouge_l,
    token_f1, NumberMatchConfig,
};
use ragbench_core::fusion::{convex_fuse, rrf_fuse, ConvexConfig, RrfConfig};
use ragbench_core::lexical::TokenizerConfig;
use ragbench_core::providers::{cache_key, hash_embedder, EmbeddingCache};
use ragbench_core::{Bm25Params, Corpus, Document, LexicalIndex, RankedList, Subset, VectorIndex};

fn ranked() -> impl Strategy<Value = RankedList> {
    prop::collection::btree_map(0u16..60, -100.0f64..100.0, 0..25).prop_map(|m| {
        RankedList::from_scores("p", m.into_iter().map(|(i, s)| (format!("d{i:02}"), s)), usize::MAX).unwrap()
    })
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["net", "cash", "flow", "lease", "tax", "rate", "debt", "2019"]),
        1..12,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn ranked_lists_are_canonically_ordered(list in ranked()) {
        list.validate().unwrap();
        for w in list.entries().windows(2) {
            prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc_id < w[1].doc_id));
        }
    }

    #[test]
    fn truncation_is_a_prefix(list in ranked(), k in 1usize..30) {
        let full: Vec<_> = list.doc_ids().map(str::to_string).collect();
        let top = RankedList::from_scores("p", list.entries().iter().map(|e| (e.doc_id.clone(), e.score)), k).unwrap();
        let expected: Vec<_> = full.iter().take(k).cloned().collect();
        prop_assert_eq!(top.doc_ids().map(str::to_string).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn metrics_are_bounded_and_monotone(list in ranked(), g in 0u16..60) {
        let gold = format!("d{g:02}");
        let mut prev = (0.0, 0.0, 0.0);
        for k in [1, 3, 5, 10, 20, 50] {
            let (r, m, n) = (recall_at_k(&list, &gold, k), mrr_at_k(&list, &gold, k), ndcg_at_k(&list, &gold, k));
            prop_assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&m) && (0.0..=1.0).contains(&n));
            prop_assert!(r >= prev.0 && m >= prev.1 && n >= prev.2);
            prop_assert!(m <= n + 1e-15 && n <= r + 1e-15);
            prev = (r, m, n);
        }
        prop_assert!(average_precision(&list, &gold) <= recall_at_k(&list, &gold, usize::MAX));
    }

    #[test]
    fn rrf_is_order_independent_and_covers_the_union(a in ranked(), b in ranked()) {
        let cfg = RrfConfig::default();
        let ab = rrf_fuse(&[&a, &b], &cfg, usize::MAX).unwrap();
        let ba = rrf_fuse(&[&b, &a], &cfg, usize::MAX).unwrap();
        prop_assert_eq!(ab.doc_ids().collect::<Vec<_>>(), ba.doc_ids().collect::<Vec<_>>());
        let union: HashSet<&str> = a.doc_ids().chain(b.doc_ids()).collect();
        prop_assert_eq!(ab.len(), union.len());
        for e in ab.entries() {
            prop_assert!(e.score > 0.0 && e.score <= 2.0 / 61.0 + 1e-15);
        }
    }

    #[test]
    fn convex_scores_stay_in_unit_interval(a in ranked(), b in ranked(), alpha in 0.0f64..=1.0) {
        let fused = convex_fuse(&a, &b, &ConvexConfig { alpha, ..Default::default() }, usize::MAX).unwrap();
        for e in fused.entries() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e.score));
        }
    }

    #[test]
    fn bm25_scores_are_non_negative_and_sorted(docs in prop::collection::vec(words(), 1..10), q in words()) {
        let corpus = Corpus::from_documents(
            docs.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), t.clone(), Subset::FinQA)).collect(),
        ).unwrap();
        let index = LexicalIndex::build(&corpus, TokenizerConfig::default()).unwrap();
        let hits = index.search(&q, &Bm25Params::default(), 100).unwrap();
        prop_assert!(hits.entries().iter().all(|e| e.score > 0.0));
        let all = index.score_all(&q, &Bm25Params::default());
        prop_assert_eq!(hits.len(), all.iter().filter(|s| **s > 0.0).count());
    }

    #[test]
    fn vector_search_is_scale_invariant(
        rows in prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 8), 1..20),
        q in prop::collection::vec(-1.0f32..1.0, 8),
        c in 0.1f32..50.0,
    ) {
        prop_assume!(q.iter().any(|x| x.abs() > 1e-3));
        prop_assume!(rows.iter().all(|r| r.iter().any(|x| x.abs() > 1e-3)));
        let index = VectorIndex::build(rows.iter().enumerate().map(|(i, r)| (format!("v{i:02}"), r.clone()))).unwrap();
        let scaled: Vec<f32> = q.iter().map(|x| x * c).collect();
        let a = index.search(&q, rows.len()).unwrap();
        let b = index.search(&scaled, rows.len()).unwrap();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            prop_assert!((x.score - y.score).abs() < 1e-5);
            prop_assert!(x.score <= 1.0 + 1e-6 && x.score >= -1.0 - 1e-6);
        }
    }

    #[test]
    fn number_match_accepts_exact_and_percent(v in -1.0e6f64..1.0e6) {
        prop_assume!(v.abs() > 1e-3);
        let cfg = NumberMatchConfig::default();
        let text = format!("{v}");
        prop_assert_eq!(extract_number(&text), Some(v));
        prop_assert_eq!(number_match(&text, v, &cfg), 1.0);
        prop_assert_eq!(number_match(&format!("{}%", v * 100.0), v, &cfg), 1.0);
        prop_assert_eq!(number_match("UNANSWERABLE", v, &cfg), 0.0);
    }

    #[test]
    fn token_overlap_metrics(a in words(), b in words()) {
        let (f, r) = (token_f1(&a, &b), rouge_l(&a, &b));
        prop_assert!((0.0..=1.0).contains(&f) && (0.0..=1.0).contains(&r));
        prop_assert!((f - token_f1(&b, &a)).abs() < 1e-12);
        prop_assert!(r <= f + 1e-12);
        prop_assert_eq!(token_f1(&a, &a), 1.0);
        prop_assert_eq!(rouge_l(&a, &a), 1.0);
    }

    #[test]
    fn bootstrap_p_is_a_probability(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40),
        seed in any::<u64>(),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let p = paired_bootstrap(&a, &b, 200, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, paired_bootstrap(&b, &a, 200, seed).unwrap());
    }

    #[test]
    fn cache_round_trips(texts in prop::collection::hash_set("[a-z ]{1,20}", 1..10)) {
        let emb = hash_embedder("m", 16);
        let cache = EmbeddingCache::new();
        for t in &texts {
            cache.insert("m", t, emb.embed_one(t));
        }
        let mut buf = Vec::new();
        cache.write_to(&mut buf).unwrap();
        let back = EmbeddingCache::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), texts.len());
        for t in &texts {
            prop_assert_eq!(back.get_key(&cache_key("m", t)), Some(emb.embed_one(t)));
        }
    }
}
