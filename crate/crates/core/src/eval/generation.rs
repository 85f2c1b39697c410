//! Answer-level metrics: numeric match, token F1 and ROUGE-L.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumberMatchConfig {
    /// Relative tolerance.
    pub epsilon: f64,
    /// Factors the prediction may be multiplied by before comparison.
    pub scale_set: Vec<f64>,
}

impl Default for NumberMatchConfig {
    fn default() -> Self {
        Self { epsilon: 1e-2, scale_set: vec![0.01, 1.0, 100.0, 1e3, 1e6, 1e9, 1e-3, 1e-6, 1e-9] }
    }
}

const CURRENCY: &[char] = &['$', '€', '£', '¥', '₹', '%'];

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?P<open>\(\s*)?(?P<sign>[-+\x{2212}])?(?P<num>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)(?P<close>\s*\))?")
            .expect("static regex")
    })
}

/// First numeric literal in `text`, after dropping currency symbols, percent
/// signs and thousands separators. `(123)` reads as -123. Returns `None` for
/// UNANSWERABLE or when no number is present.
pub fn extract_number(text: &str) -> Option<f64> {
    if text.to_ascii_uppercase().contains("UNANSWERABLE") {
        return None;
    }
    let cleaned: String = text.chars().filter(|c| !CURRENCY.contains(c)).collect();
    let caps = number_re().captures(&cleaned)?;
    let mut value: f64 = caps["num"].replace(',', "").parse().ok()?;
    if matches!(caps.name("sign").map(|m| m.as_str()), Some("-") | Some("\u{2212}")) {
        value = -value;
    }
    if caps.name("open").is_some() && caps.name("close").is_some() {
        value = -value.abs();
    }
    value.is_finite().then_some(value)
}

/// 1 when some `s` in the scale set gives `|s * pred - gold| <= eps * max(|gold|, 1e-12)`.
pub fn number_match(answer: &str, gold: f64, cfg: &NumberMatchConfig) -> f64 {
    let Some(pred) = extract_number(answer) else { return 0.0 };
    let tol = cfg.epsilon * gold.abs().max(1e-12);
    if cfg.scale_set.iter().any(|s| (s * pred - gold).abs() <= tol) {
        1.0
    } else {
        0.0
    }
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

/// Harmonic mean of multiset token precision and recall.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = tokens(pred);
    let g = tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F-measure over lowercase whitespace tokens (beta = 1).
pub fn rouge_l(pred: &str, gold: &str) -> f64 {
    let p = tokens(pred);
    let g = tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let lcs = lcs_len(&p, &g);
    if lcs == 0 {
        return 0.0;
    }
    let precision = lcs as f64 / p.len() as f64;
    let recall = lcs as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
