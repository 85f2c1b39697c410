use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tracing::info;

use super::config::{ExperimentConfig, Method};
use super::engine::Engine;
use super::report::RunReport;
use super::run::run_experiment;
use crate::corpus::QuerySet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    RrfK,
    RerankPool,
    RerankTopN,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::RrfK => "rrf_k",
            SweepAxis::RerankPool => "rerank_pool",
            SweepAxis::RerankTopN => "rerank_top_n",
        }
    }

    /// The method whose behaviour the axis changes.
    pub fn method(self) -> Method {
        match self {
            SweepAxis::Alpha => Method::HybridCc,
            SweepAxis::RrfK => Method::HybridRrf,
            SweepAxis::RerankPool | SweepAxis::RerankTopN => Method::HybridRerank,
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidParam(format!("{self} needs a positive integer, got {value}")))
            }
        };
        match self {
            SweepAxis::Alpha => cfg.convex.alpha = value,
            SweepAxis::RrfK => cfg.rrf.k_rrf = value,
            SweepAxis::RerankPool => cfg.strategy.rerank_pool = count()?,
            SweepAxis::RerankTopN => cfg.strategy.rerank_top_n = count()?,
        }
        cfg.method = self.method();
        cfg.validate()
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepAxis::Alpha, SweepAxis::RrfK, SweepAxis::RerankPool, SweepAxis::RerankTopN]
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::UnknownAxis(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

/// One long-format row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub method: String,
    pub metric: String,
    pub mean: f64,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for p in &self.points {
            for (method, result) in &p.report.methods {
                for (metric, mean) in &result.metrics.aggregates {
                    rows.push(SweepRow {
                        axis: self.axis.to_string(),
                        value: p.value,
                        method: method.clone(),
                        metric: metric.clone(),
                        mean: *mean,
                    });
                }
            }
        }
        rows
    }

    /// Mean of `metric` at each sweep value, in sweep order.
    pub fn series(&self, metric: &str) -> Result<Vec<(f64, f64)>> {
        self.points
            .iter()
            .map(|p| {
                let result = p.report.method(self.axis.method().as_str())?;
                Ok((p.value, result.mean(metric)?))
            })
            .collect()
    }
}

/// Runs the axis's method once per value. All runs share `engine`, so
/// indexes and embeddings are built once.
pub fn sweep(
    template: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    engine: &Engine,
    queries: &QuerySet,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidParam("sweep needs at least one value".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = template.clone();
        axis.apply(&mut cfg, value)?;
        info!(%axis, value, "sweep point");
        points.push(SweepPoint { value, report: run_experiment(&cfg, engine, queries)? });
    }
    Ok(SweepResult { axis, points })
}
