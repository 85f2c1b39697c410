//! Rank metrics for a single relevant document per query.
//!
//! With one gold document every metric is a function of the gold's 1-based
//! rank alone; scores are never consulted.

use crate::corpus::RankedList;

fn gold_rank(ranked: &RankedList, gold: &str) -> Option<usize> {
    ranked.rank_of(gold)
}

pub fn recall_at_k(ranked: &RankedList, gold: &str, k: usize) -> f64 {
    match gold_rank(ranked, gold) {
        Some(r) if r <= k => 1.0,
        _ => 0.0,
    }
}

pub fn mrr_at_k(ranked: &RankedList, gold: &str, k: usize) -> f64 {
    match gold_rank(ranked, gold) {
        Some(r) if r <= k => 1.0 / r as f64,
        _ => 0.0,
    }
}

/// Binary gain; the ideal DCG is 1 because there is exactly one relevant document.
pub fn ndcg_at_k(ranked: &RankedList, gold: &str, k: usize) -> f64 {
    match gold_rank(ranked, gold) {
        Some(r) if r <= k => 1.0 / ((r + 1) as f64).log2(),
        _ => 0.0,
    }
}

/// Average precision over the full returned list.
pub fn average_precision(ranked: &RankedList, gold: &str) -> f64 {
    gold_rank(ranked, gold).map_or(0.0, |r| 1.0 / r as f64)
}
