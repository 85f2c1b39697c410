use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use rayon::prelude::*;
use tracing::{info, warn};

use super::config::ExperimentConfig;
use super::engine::{retrieve_with, Engine};
use super::report::{MethodResult, QueryRecord, RunReport, REPORT_FORMAT_VERSION};
use crate::corpus::QuerySet;
use crate::error::{Error, Result};
use crate::eval::retrieval_metrics;

/// Retrieves every query with `cfg.method` and scores it at each cutoff.
///
/// Queries run in parallel; results are keyed by query id so the report does
/// not depend on scheduling. If any query fails, the completed records are
/// written to `cfg.paths.partial_results` (when set) and the run aborts.
pub fn run_experiment(cfg: &ExperimentConfig, engine: &Engine, queries: &QuerySet) -> Result<RunReport> {
    cfg.validate()?;
    let method = cfg.method;
    engine.prepare(method, cfg)?;
    let retriever = engine.retriever(method, cfg)?;
    let depth = cfg.max_cutoff();
    let ledger = &engine.providers().ledger;
    let start = ledger.total_calls();
    info!(%method, queries = queries.len(), "running experiment");

    let outcomes: Vec<Result<(QueryRecord, BTreeMap<String, f64>)>> = queries
        .queries()
        .par_iter()
        .map(|q| {
            let ranked = retrieve_with(retriever.as_deref(), &q.text, &q.gold_doc_id, depth)?;
            let metrics = retrieval_metrics(&ranked, &q.gold_doc_id, &cfg.cutoffs);
            let record = QueryRecord {
                query_id: q.query_id.clone(),
                subset: q.subset,
                gold_doc_id: q.gold_doc_id.clone(),
                retrieved: ranked.doc_ids().take(depth).map(str::to_string).collect(),
            };
            Ok((record, metrics))
        })
        .collect();

    let total = outcomes.len();
    let mut rows = Vec::with_capacity(total);
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(_) => {}
        }
    }
    if let Some(cause) = first_error {
        warn!(%method, completed = rows.len(), total, "run aborted");
        if let Some(path) = &cfg.paths.partial_results {
            write_partial(path, &rows)?;
        }
        return Err(Error::RunAborted {
            method: method.to_string(),
            completed: rows.len(),
            total,
            cause: cause.to_string(),
        });
    }

    Ok(RunReport {
        format_version: REPORT_FORMAT_VERSION,
        config: cfg.clone(),
        methods: BTreeMap::from([(method.to_string(), MethodResult::from_rows(&cfg.cutoffs, rows))]),
        ledger: ledger.summary_since(start),
    })
}

fn write_partial(path: &std::path::Path, rows: &[(QueryRecord, BTreeMap<String, f64>)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut sorted: Vec<_> = rows.iter().collect();
    sorted.sort_by(|a, b| a.0.query_id.cmp(&b.0.query_id));
    for (rec, metrics) in sorted {
        let line = serde_json::json!({ "record": rec, "metrics": metrics });
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Runs each method with otherwise identical settings and merges the reports.
pub fn run_methods(
    cfg: &ExperimentConfig,
    methods: &[super::config::Method],
    engine: &Engine,
    queries: &QuerySet,
) -> Result<RunReport> {
    let mut merged: Option<RunReport> = None;
    for &m in methods {
        let report = run_experiment(&cfg.clone().with_method(m), engine, queries)?;
        merged = Some(match merged {
            None => report,
            Some(acc) => acc.merge(report)?,
        });
    }
    merged.ok_or_else(|| Error::InvalidParam("no methods to run".into()))
}
