//! Deterministic providers for offline runs and tests.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use regex::Regex;

use super::{CompletionProvider, EmbeddingProvider, RerankDoc, RerankHit, RerankProvider};
use crate::error::{Error, Result};
use crate::lexical::{tokenize, TokenizerConfig};

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Signed feature hashing of character trigrams, L2-normalized.
///
/// Texts sharing word fragments land close together, so morphological
/// variants ("revenue" / "revenues") match even though their tokens differ.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    model_id: String,
    dimension: usize,
    seed: u64,
}

pub fn hash_embedder(model_id: &str, dimension: usize) -> HashEmbedder {
    HashEmbedder::new(model_id, dimension, 42)
}

impl HashEmbedder {
    pub fn new(model_id: &str, dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { model_id: model_id.to_string(), dimension, seed }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut acc = vec![0.0f64; self.dimension];
        for tok in tokenize(text, &TokenizerConfig::default()) {
            let padded: Vec<char> = std::iter::once('#').chain(tok.chars()).chain(std::iter::once('#')).collect();
            for w in padded.windows(3) {
                let gram: String = w.iter().collect();
                let h = fnv1a(self.seed, gram.as_bytes());
                let bucket = (h % self.dimension as u64) as usize;
                acc[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
            }
        }
        let mut norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            let h = fnv1a(self.seed, text.as_bytes());
            acc[(h % self.dimension as u64) as usize] = 1.0;
            norm = 1.0;
        }
        acc.iter().map(|x| (x / norm) as f32).collect()
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Clone)]
pub enum Response {
    Fixed(String),
    Dynamic(Arc<dyn Fn(&str) -> String + Send + Sync>),
}

impl fmt::Debug for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Fixed(s) => f.debug_tuple("Fixed").field(s).finish(),
            Response::Dynamic(_) => f.write_str("Dynamic(..)"),
        }
    }
}

/// Completion double that answers by the first rule whose regex matches the prompt.
#[derive(Debug, Clone)]
pub struct ScriptedCompletion {
    model_id: String,
    rules: Vec<(Regex, Response)>,
}

impl ScriptedCompletion {
    pub fn new(model_id: &str) -> Self {
        Self { model_id: model_id.to_string(), rules: Vec::new() }
    }

    /// Adds a rule; `pattern` is a regex searched anywhere in the prompt.
    pub fn rule(mut self, pattern: &str, response: impl Into<String>) -> Self {
        let re = Regex::new(pattern).expect("invalid rule pattern");
        self.rules.push((re, Response::Fixed(response.into())));
        self
    }

    /// Like [`rule`](Self::rule) with the literal text escaped.
    pub fn rule_literal(self, needle: &str, response: impl Into<String>) -> Self {
        let pattern = regex::escape(needle);
        self.rule(&pattern, response)
    }

    pub fn rule_fn(mut self, pattern: &str, f: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        let re = Regex::new(pattern).expect("invalid rule pattern");
        self.rules.push((re, Response::Dynamic(Arc::new(f))));
        self
    }

    pub fn respond(&self, prompt: &str) -> Result<String> {
        for (re, resp) in &self.rules {
            if re.is_match(prompt) {
                return Ok(match resp {
                    Response::Fixed(s) => s.clone(),
                    Response::Dynamic(f) => f(prompt),
                });
            }
        }
        let head: String = prompt.chars().take(60).collect();
        Err(Error::UnmatchedPrompt(head))
    }
}

impl CompletionProvider for ScriptedCompletion {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn complete(&self, prompt: &str, _temperature: f64, _max_tokens: u32) -> Result<String> {
        self.respond(prompt)
    }
}

fn capture<'a>(re: &Regex, prompt: &'a str) -> &'a str {
    re.captures(prompt).and_then(|c| c.get(1)).map_or("", |m| m.as_str().trim())
}

fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text, &TokenizerConfig::default()).into_iter().filter(|t| t.len() > 2).collect()
}

fn first_number(text: &str) -> Option<String> {
    let re = Regex::new(r"-?\d[\d,]*(?:\.\d+)?").expect("static regex");
    re.find(text).map(|m| m.as_str().replace(',', ""))
}

/// A scripted completion that answers every built-in prompt with a cheap
/// deterministic heuristic, so the whole pipeline runs without network access.
///
/// Generation copies the first number in the context, relevance grading uses
/// query/document token overlap, rewrites and HyDE passages echo the question,
/// and document summaries are the first 25 words.
pub fn offline_completion(model_id: &str) -> ScriptedCompletion {
    let question = Regex::new(r"(?m)^(?:Original question|Question): (.*)$").expect("static regex");
    let eval_doc = Regex::new(r"(?s)Document: (.*?)\n\nRespond with").expect("static regex");
    let whole_doc = Regex::new(r"(?s)<document>\n(.*?)\n</document>").expect("static regex");
    let context = Regex::new(r"(?s)Context:\n(.*?)\n\nQuestion:").expect("static regex");
    let header = Regex::new(r"(?m)^Document \d+:$").expect("static regex");

    let (q1, q2, q3, q4) = (question.clone(), question.clone(), question.clone(), question);
    ScriptedCompletion::new(model_id)
        .rule_fn(r"Classification:\s*$", move |p| {
            let query = content_tokens(capture(&q1, p));
            let doc: std::collections::HashSet<String> = content_tokens(capture(&eval_doc, p)).into_iter().collect();
            if query.is_empty() {
                return "AMBIGUOUS".into();
            }
            let hit = query.iter().filter(|t| doc.contains(*t)).count() as f64 / query.len() as f64;
            match hit {
                h if h >= 0.6 => "RELEVANT".into(),
                h if h >= 0.3 => "AMBIGUOUS".into(),
                _ => "IRRELEVANT".into(),
            }
        })
        .rule_fn(r"Rewritten question:\s*$", move |p| capture(&q2, p).to_string())
        .rule_fn(r"Alternative queries:\s*$", move |p| {
            let q = capture(&q3, p);
            format!("1. {q}\n2. {q} financial statement\n3. {q} reported figures")
        })
        .rule_fn(r"Passage:\s*$", move |p| capture(&q4, p).to_string())
        .rule_fn(r"(?s)<document>.*</document>", move |p| {
            capture(&whole_doc, p).split_whitespace().take(25).collect::<Vec<_>>().join(" ")
        })
        .rule_fn(r"Answer:\s*$", move |p| {
            let ctx = header.replace_all(capture(&context, p), "");
            first_number(&ctx).unwrap_or_else(|| "UNANSWERABLE".into())
        })
        .rule(r"Category:\s*$", "vocabulary mismatch")
}

/// Reranker double: the query's gold document scores 1.0; every other
/// document scores `0.5 / (1 + input position)`, preserving first-stage order.
#[derive(Debug, Clone, Default)]
pub struct OracleReranker {
    model_id: String,
    gold: HashMap<String, String>,
}

/// `gold` maps query text to the id of its gold document.
pub fn oracle_reranker(gold: HashMap<String, String>) -> OracleReranker {
    OracleReranker { model_id: "oracle-rerank".to_string(), gold }
}

impl RerankProvider for OracleReranker {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn rerank(&self, query: &str, documents: &[RerankDoc<'_>], top_n: usize) -> Result<Vec<RerankHit>> {
        let gold = self.gold.get(query);
        let mut hits: Vec<RerankHit> = documents
            .iter()
            .enumerate()
            .map(|(i, d)| RerankHit {
                index: i,
                score: if gold.is_some_and(|g| g == d.id) { 1.0 } else { 0.5 / (1.0 + i as f64) },
            })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| documents[a.index].id.cmp(documents[b.index].id)));
        hits.truncate(top_n);
        Ok(hits)
    }
}
