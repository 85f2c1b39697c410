//! Retrieval and generation metrics plus significance testing.

pub mod generation;
pub mod retrieval;
pub mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::RankedList;

pub use generation::{extract_number, number_match, rouge_l, token_f1, NumberMatchConfig};
pub use retrieval::{average_precision, mrr_at_k, ndcg_at_k, recall_at_k};
pub use stats::{bonferroni, is_significant, paired_bootstrap, DEFAULT_BOOTSTRAP_SAMPLES, SIGNIFICANCE_LEVEL};

pub const DEFAULT_CUTOFFS: [usize; 5] = [1, 3, 5, 10, 20];

/// Metric names in report order: recall@k, mrr@k, ndcg@k for each cutoff, then map.
pub fn retrieval_metric_names(cutoffs: &[usize]) -> Vec<String> {
    let mut names = Vec::with_capacity(cutoffs.len() * 3 + 1);
    for family in ["recall", "mrr", "ndcg"] {
        for k in cutoffs {
            names.push(format!("{family}@{k}"));
        }
    }
    names.push("map".to_string());
    names
}

/// All retrieval metrics for one query.
pub fn retrieval_metrics(ranked: &RankedList, gold: &str, cutoffs: &[usize]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for &k in cutoffs {
        out.insert(format!("recall@{k}"), recall_at_k(ranked, gold, k));
        out.insert(format!("mrr@{k}"), mrr_at_k(ranked, gold, k));
        out.insert(format!("ndcg@{k}"), ndcg_at_k(ranked, gold, k));
    }
    out.insert("map".to_string(), average_precision(ranked, gold));
    out
}

/// Per-query values and their means. Means are recomputed from the
/// per-query table, iterating in query-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub cutoffs: Vec<usize>,
    pub per_query: BTreeMap<String, BTreeMap<String, f64>>,
    pub aggregates: BTreeMap<String, f64>,
}

impl MetricReport {
    /// `rows` maps query id to that query's metric values.
    pub fn from_rows(cutoffs: &[usize], rows: BTreeMap<String, BTreeMap<String, f64>>) -> Self {
        let mut per_query: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (qid, metrics) in rows {
            for (m, v) in metrics {
                per_query.entry(m).or_default().insert(qid.clone(), v);
            }
        }
        let aggregates = per_query.iter().map(|(m, vals)| (m.clone(), mean(vals.values().copied()))).collect();
        Self { cutoffs: cutoffs.to_vec(), per_query, aggregates }
    }

    pub fn values(&self, metric: &str) -> Option<&BTreeMap<String, f64>> {
        self.per_query.get(metric)
    }

    pub fn query_ids(&self) -> Vec<&str> {
        self.per_query.values().next().map(|v| v.keys().map(String::as_str).collect()).unwrap_or_default()
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
