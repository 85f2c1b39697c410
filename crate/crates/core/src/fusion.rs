//! Rank-level (reciprocal rank) and score-level (convex) list fusion.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::RankedList;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrfConfig {
    pub k_rrf: f64,
}

impl Default for RrfConfig {
    fn default() -> Self {
        Self { k_rrf: 60.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    MinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvexConfig {
    /// Weight of the dense list; the sparse list gets `1 - alpha`.
    pub alpha: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for ConvexConfig {
    fn default() -> Self {
        Self { alpha: 0.5, normalization: Normalization::MinMax }
    }
}

/// Reciprocal rank fusion: each list adds `1 / (k_rrf + rank)` (1-based rank)
/// for every document it contains; absent documents get nothing from it.
pub fn rrf_fuse(lists: &[&RankedList], cfg: &RrfConfig, k: usize) -> Result<RankedList> {
    if lists.len() < 2 {
        return Err(Error::TooFewLists(lists.len()));
    }
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if !(cfg.k_rrf > 0.0 && cfg.k_rrf.is_finite()) {
        return Err(Error::InvalidParam(format!("k_rrf must be > 0, got {}", cfg.k_rrf)));
    }
    let mut fused: HashMap<&str, f64> = HashMap::new();
    for list in lists {
        for (pos, e) in list.entries().iter().enumerate() {
            *fused.entry(e.doc_id.as_str()).or_insert(0.0) += 1.0 / (cfg.k_rrf + (pos + 1) as f64);
        }
    }
    RankedList::from_scores("rrf", fused.into_iter().map(|(d, s)| (d.to_string(), s)), k)
}

fn min_max(list: &RankedList) -> HashMap<&str, f64> {
    let (lo, hi) = list
        .entries()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.score), hi.max(e.score)));
    let span = hi - lo;
    list.entries()
        .iter()
        .map(|e| {
            let v = if span > 0.0 { (e.score - lo) / span } else { 1.0 };
            (e.doc_id.as_str(), v)
        })
        .collect()
}

/// `alpha * dense + (1 - alpha) * sparse` over min-max normalized scores.
/// Each list is normalized over the documents it returned; a constant list
/// normalizes to all ones, and a document missing from a list gets 0 from it.
pub fn convex_fuse(sparse: &RankedList, dense: &RankedList, cfg: &ConvexConfig, k: usize) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::InvalidParam(format!("alpha must be in [0,1], got {}", cfg.alpha)));
    }
    if sparse.is_empty() && dense.is_empty() {
        return Ok(RankedList::empty("cc"));
    }
    let s = min_max(sparse);
    let d = min_max(dense);
    let mut fused: HashMap<&str, f64> = HashMap::with_capacity(s.len() + d.len());
    for (id, v) in &s {
        *fused.entry(id).or_insert(0.0) += (1.0 - cfg.alpha) * v;
    }
    for (id, v) in &d {
        *fused.entry(id).or_insert(0.0) += cfg.alpha * v;
    }
    RankedList::from_scores("cc", fused.into_iter().map(|(id, v)| (id.to_string(), v)), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(items: &[(&str, f64)]) -> RankedList {
        RankedList::from_scores("t", items.iter().map(|(d, s)| (d.to_string(), *s)), usize::MAX).unwrap()
    }

    #[test]
    fn rrf_arithmetic() {
        let a = list(&[("x", 3.0), ("y", 2.0)]);
        let b = list(&[("x", 0.9), ("z", 0.1)]);
        let f = rrf_fuse(&[&a, &b], &RrfConfig::default(), 10).unwrap();
        assert_eq!(f.entries()[0].doc_id, "x");
        assert!((f.entries()[0].score - 2.0 / 61.0).abs() < 1e-15);
        // y and z both sit at rank 2 in one list only
        assert!((f.entries()[1].score - 1.0 / 62.0).abs() < 1e-15);
        assert_eq!(f.entries()[1].doc_id, "y");

        let c = list(&[("only", 1.0)]);
        let empty = RankedList::empty("e");
        let g = rrf_fuse(&[&c, &empty], &RrfConfig::default(), 1).unwrap();
        assert!((g.entries()[0].score - 1.0 / 61.0).abs() < 1e-15);
    }

    #[test]
    fn rrf_errors() {
        let a = list(&[("x", 1.0)]);
        assert!(matches!(rrf_fuse(&[&a], &RrfConfig::default(), 1), Err(Error::TooFewLists(1))));
        assert!(matches!(rrf_fuse(&[&a, &a], &RrfConfig::default(), 0), Err(Error::ZeroK)));
        assert!(rrf_fuse(&[&a, &a], &RrfConfig { k_rrf: 0.0 }, 1).is_err());
    }

    #[test]
    fn convex_hand_arithmetic() {
        // sparse normalized: a=1, b=0.5, c=0 ; dense normalized: b=1, c=0.75, d=0
        let sparse = list(&[("a", 10.0), ("b", 6.0), ("c", 2.0)]);
        let dense = list(&[("b", 0.9), ("c", 0.8), ("d", 0.5)]);
        let f = convex_fuse(&sparse, &dense, &ConvexConfig::default(), 10).unwrap();
        let got: Vec<(&str, f64)> = f.entries().iter().map(|e| (e.doc_id.as_str(), e.score)).collect();
        let want = [("b", 0.75), ("a", 0.5), ("c", 0.375), ("d", 0.0)];
        for ((gd, gs), (wd, ws)) in got.iter().zip(want) {
            assert_eq!(*gd, wd);
            assert!((gs - ws).abs() < 1e-12, "{gd}: {gs} vs {ws}");
        }
    }

    #[test]
    fn convex_constant_list_normalizes_to_one() {
        let sparse = list(&[("a", 2.0), ("b", 2.0)]);
        let dense = list(&[("c", 0.4)]);
        let f = convex_fuse(&sparse, &dense, &ConvexConfig { alpha: 0.5, ..Default::default() }, 3).unwrap();
        assert!(f.entries().iter().all(|e| (e.score - 0.5).abs() < 1e-12));
        assert!(convex_fuse(&sparse, &dense, &ConvexConfig { alpha: 1.5, ..Default::default() }, 3).is_err());
        assert!(matches!(convex_fuse(&sparse, &dense, &ConvexConfig::default(), 0), Err(Error::ZeroK)));
    }
}
