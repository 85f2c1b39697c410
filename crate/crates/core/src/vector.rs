//! Exact inner-product search over L2-normalized document embeddings.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::corpus::RankedList;
use crate::error::{Error, Result};

// Below this many rows the sequential scan wins.
const PAR_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    rows: Vec<f32>,
    row_ids: Vec<String>,
}

fn normalized(id: &str, v: &[f32]) -> Result<Vec<f32>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(id.to_string()));
    }
    let norm = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector(id.to_string()));
    }
    Ok(v.iter().map(|&x| (f64::from(x) / norm) as f32).collect())
}

#[inline]
fn dot(row: &[f32], q: &[f32]) -> f64 {
    row.iter().zip(q).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum()
}

impl VectorIndex {
    pub fn build(vectors: impl IntoIterator<Item = (String, Vec<f32>)>) -> Result<Self> {
        let mut dimension = None;
        let mut rows = Vec::new();
        let mut row_ids = Vec::new();
        let mut seen = HashSet::new();
        for (id, v) in vectors {
            let dim = *dimension.get_or_insert(v.len());
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId { index: row_ids.len(), id });
            }
            rows.extend(normalized(&id, &v)?);
            row_ids.push(id);
        }
        let dimension = dimension.ok_or(Error::EmptyCorpus)?;
        if dimension == 0 {
            return Err(Error::InvalidParam("zero-dimensional vectors".into()));
        }
        Ok(Self { dimension, rows, row_ids })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Cosine score of `query` against every row, in row order.
    pub fn scores(&self, query: &[f32]) -> Result<Vec<f64>> {
        if query.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, actual: query.len() });
        }
        let q = normalized("<query>", query)?;
        let scores = if self.len() >= PAR_THRESHOLD {
            self.rows.par_chunks_exact(self.dimension).map(|row| dot(row, &q)).collect()
        } else {
            self.rows.chunks_exact(self.dimension).map(|row| dot(row, &q)).collect()
        };
        Ok(scores)
    }

    /// Full scan; returns the exact top-`k` by (score desc, doc id asc).
    pub fn search(&self, query: &[f32], k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let scores = self.scores(query)?;
        RankedList::from_scores("dense", scores.into_iter().enumerate().map(|(i, s)| (self.row_ids[i].clone(), s)), k)
    }
}
