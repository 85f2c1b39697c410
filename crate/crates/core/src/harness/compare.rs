use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::report::RunReport;
use crate::error::{Error, Result};
use crate::eval::{bonferroni, is_significant, mean, paired_bootstrap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub method_a: String,
    pub method_b: String,
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_a - mean_b`.
    pub delta: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub significant: bool,
}

/// Pairwise paired-bootstrap comparison of every method in `reports` on one
/// metric, Bonferroni-corrected over all pairs.
///
/// Methods are labelled by name; a name seen again gets a `#2`, `#3` suffix,
/// so a report can be compared with itself. All methods must cover exactly
/// the same query ids.
pub fn compare_methods(reports: &[RunReport], metric: &str, samples: usize, seed: u64) -> Result<Vec<SignificanceRow>> {
    let mut entries: Vec<(String, &BTreeMap<String, f64>)> = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for report in reports {
        for (name, result) in &report.methods {
            let values = result.metrics.values(metric).ok_or_else(|| Error::UnknownMetric(metric.to_string()))?;
            let n = seen.entry(name).or_insert(0);
            *n += 1;
            let label = if *n == 1 { name.clone() } else { format!("{name}#{n}") };
            entries.push((label, values));
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    if let Some((first_label, first)) = entries.first() {
        for (label, values) in &entries[1..] {
            if !values.keys().eq(first.keys()) {
                return Err(Error::QuerySetMismatch(first_label.clone(), label.clone()));
            }
        }
    }

    let mut rows = Vec::new();
    let mut p_values = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let a: Vec<f64> = entries[i].1.values().copied().collect();
            let b: Vec<f64> = entries[j].1.values().copied().collect();
            let p = paired_bootstrap(&a, &b, samples, seed)?;
            let (mean_a, mean_b) = (mean(a.iter().copied()), mean(b.iter().copied()));
            p_values.push(p);
            rows.push(SignificanceRow {
                method_a: entries[i].0.clone(),
                method_b: entries[j].0.clone(),
                metric: metric.to_string(),
                mean_a,
                mean_b,
                delta: mean_a - mean_b,
                p_value: p,
                adjusted_p: p,
                significant: false,
            });
        }
    }
    if rows.is_empty() {
        return Ok(rows);
    }
    let adjusted = bonferroni(&p_values, p_values.len())?;
    for (row, adj) in rows.iter_mut().zip(adjusted) {
        row.adjusted_p = adj;
        row.significant = is_significant(adj);
    }
    Ok(rows)
}
