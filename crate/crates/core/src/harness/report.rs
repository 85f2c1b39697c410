use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::corpus::Subset;
use crate::error::{Error, Result};
use crate::eval::{mean, MetricReport};
use crate::providers::LedgerTotals;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub subset: Subset,
    pub gold_doc_id: String,
    /// Retrieved ids down to the deepest cutoff.
    pub retrieved: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub count: usize,
    pub means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub metrics: MetricReport,
    pub per_subset: BTreeMap<String, SubsetSummary>,
    /// Sorted by query id.
    pub queries: Vec<QueryRecord>,
}

impl MethodResult {
    pub fn from_rows(cutoffs: &[usize], rows: Vec<(QueryRecord, BTreeMap<String, f64>)>) -> Self {
        let mut queries = Vec::with_capacity(rows.len());
        let mut table = BTreeMap::new();
        for (rec, metrics) in rows {
            table.insert(rec.query_id.clone(), metrics);
            queries.push(rec);
        }
        queries.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let metrics = MetricReport::from_rows(cutoffs, table);
        let per_subset = subset_breakdown(&metrics, &queries);
        Self { metrics, per_subset, queries }
    }

    /// Rebuilds every aggregate from the stored per-query values.
    pub fn recomputed(&self) -> Self {
        let rows = self
            .queries
            .iter()
            .map(|q| {
                let m = self
                    .metrics
                    .per_query
                    .iter()
                    .filter_map(|(name, vals)| vals.get(&q.query_id).map(|v| (name.clone(), *v)))
                    .collect();
                (q.clone(), m)
            })
            .collect();
        Self::from_rows(&self.metrics.cutoffs, rows)
    }

    pub fn mean(&self, metric: &str) -> Result<f64> {
        self.metrics.aggregates.get(metric).copied().ok_or_else(|| Error::UnknownMetric(metric.to_string()))
    }
}

fn subset_breakdown(metrics: &MetricReport, queries: &[QueryRecord]) -> BTreeMap<String, SubsetSummary> {
    let mut groups: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for q in queries {
        groups.entry(q.subset.as_str().to_string()).or_default().push(&q.query_id);
    }
    groups
        .into_iter()
        .map(|(subset, ids)| {
            let means = metrics
                .per_query
                .iter()
                .map(|(name, vals)| (name.clone(), mean(ids.iter().filter_map(|id| vals.get(*id).copied()))))
                .collect();
            (subset, SubsetSummary { count: ids.len(), means })
        })
        .collect()
}

/// Everything one experiment produced: the config it ran with, per-method
/// per-query results and aggregates, and the provider calls it made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub methods: BTreeMap<String, MethodResult>,
    pub ledger: BTreeMap<String, LedgerTotals>,
}

impl RunReport {
    pub fn method(&self, name: &str) -> Result<&MethodResult> {
        self.methods.get(name).ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    /// Recomputes all aggregates from per-query data. Serializing the result
    /// reproduces the original file byte for byte.
    pub fn regenerate(&self) -> Self {
        Self { methods: self.methods.iter().map(|(k, v)| (k.clone(), v.recomputed())).collect(), ..self.clone() }
    }

    /// Folds `other`'s methods and ledger into this report. The first
    /// report's config is kept; a method present in both is an error.
    pub fn merge(mut self, other: RunReport) -> Result<Self> {
        for (name, result) in other.methods {
            if self.methods.contains_key(&name) {
                return Err(Error::InvalidParam(format!("method `{name}` appears in both reports")));
            }
            self.methods.insert(name, result);
        }
        for (key, t) in other.ledger {
            let e = self.ledger.entry(key).or_default();
            e.calls += t.calls;
            e.items += t.items;
            e.payload_bytes += t.payload_bytes;
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunReport = serde_json::from_str(text)?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::InvalidParam(format!("unsupported report version {}", r.format_version)));
        }
        Ok(r)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
