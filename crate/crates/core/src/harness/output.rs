use std::fmt::Write as _;
use std::io::Write;

use super::compare::SignificanceRow;
use super::generate::{GenerationRecord, GenerationSummary};
use super::report::RunReport;
use super::sweep::SweepResult;
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParam(format!("csv: {other:?}")),
    }
}

/// Long format: one row per (method, query, metric).
pub fn write_per_query_csv<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "query_id", "subset", "metric", "value"]).map_err(csv_err)?;
    for (method, result) in &report.methods {
        for q in &result.queries {
            for (metric, vals) in &result.metrics.per_query {
                if let Some(v) = vals.get(&q.query_id) {
                    w.write_record([method, &q.query_id, q.subset.as_str(), metric, &v.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_significance_csv<W: Write>(rows: &[SignificanceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `method,k,recall` for every method and cutoff.
pub fn write_recall_curve_csv<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "k", "recall"]).map_err(csv_err)?;
    for (method, result) in &report.methods {
        for k in &result.metrics.cutoffs {
            let r = result.mean(&format!("recall@{k}"))?;
            w.write_record([method.as_str(), &k.to_string(), &r.to_string()]).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in sweep.rows() {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_generation_csv<W: Write>(records: &[GenerationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "query_id",
        "subset",
        "answer",
        "gold_answer",
        "number_match",
        "token_f1",
        "rouge_l",
        "context",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.method.as_str(),
            &r.query_id,
            r.subset.as_str(),
            &r.answer,
            &r.gold_answer.to_string(),
            &r.number_match.to_string(),
            &r.token_f1.to_string(),
            &r.rouge_l.to_string(),
            &r.context_doc_ids.join(" "),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Metrics shown in the summary table: recall at every cutoff, MRR@3 (or the
/// smallest cutoff above it), nDCG at the deepest cutoff, then MAP.
pub fn summary_metrics(cutoffs: &[usize]) -> Vec<String> {
    let mut sorted = cutoffs.to_vec();
    sorted.sort_unstable();
    let mut names: Vec<String> = sorted.iter().map(|k| format!("recall@{k}")).collect();
    if let Some(k) = sorted.iter().find(|&&k| k >= 3).or(sorted.last()) {
        names.push(format!("mrr@{k}"));
    }
    if let Some(k) = sorted.last() {
        names.push(format!("ndcg@{k}"));
    }
    names.push("map".into());
    names
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    let line = |s: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut s, header);
    line(&mut s, &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for r in rows {
        line(&mut s, r);
    }
    s
}

/// Human-readable overview, values at three decimals. Includes a per-subset
/// block for each method.
pub fn summary_table(report: &RunReport) -> String {
    let Some(first) = report.methods.values().next() else {
        return String::from("(no methods)\n");
    };
    let metrics = summary_metrics(&first.metrics.cutoffs);
    let fmt_row = |label: String, n: usize, means: &std::collections::BTreeMap<String, f64>| {
        let mut row = vec![label, n.to_string()];
        row.extend(metrics.iter().map(|m| means.get(m).map_or("-".to_string(), |v| format!("{v:.3}"))));
        row
    };
    let mut header = vec!["method".to_string(), "n".to_string()];
    header.extend(metrics.iter().cloned());

    let rows: Vec<Vec<String>> =
        report.methods.iter().map(|(m, r)| fmt_row(m.clone(), r.queries.len(), &r.metrics.aggregates)).collect();
    let mut out = table(&header, &rows);

    let subset_rows: Vec<Vec<String>> = report
        .methods
        .iter()
        .flat_map(|(m, r)| r.per_subset.iter().map(move |(s, sum)| (format!("{m} / {s}"), sum)))
        .map(|(label, sum)| fmt_row(label, sum.count, &sum.means))
        .collect();
    if !subset_rows.is_empty() {
        out.push('\n');
        out.push_str(&table(&header, &subset_rows));
    }
    out
}

pub fn significance_table(rows: &[SignificanceRow]) -> String {
    let header: Vec<String> =
        ["method_a", "method_b", "metric", "delta", "p", "adj_p", "sig"].iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method_a.clone(),
                r.method_b.clone(),
                r.metric.clone(),
                format!("{:+.3}", r.delta),
                format!("{:.4}", r.p_value),
                format!("{:.4}", r.adjusted_p),
                if r.significant { "*".into() } else { String::new() },
            ]
        })
        .collect();
    table(&header, &body)
}

pub fn generation_table(summaries: &[GenerationSummary]) -> String {
    let header: Vec<String> =
        ["method", "n", "number_match", "token_f1", "rouge_l"].iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.method.clone(),
                s.count.to_string(),
                format!("{:.3}", s.number_match),
                format!("{:.3}", s.token_f1),
                format!("{:.3}", s.rouge_l),
            ]
        })
        .collect();
    table(&header, &body)
}
