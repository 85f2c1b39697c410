use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::engine::{retrieve_with, Engine};
use crate::corpus::{Document, QuerySet, Subset};
use crate::error::{Error, Result};
use crate::eval::{mean, number_match, rouge_l, token_f1};
use crate::strategies::prompts::render;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub query_id: String,
    pub subset: Subset,
    pub method: String,
    pub context_doc_ids: Vec<String>,
    pub answer: String,
    pub gold_answer: f64,
    pub number_match: f64,
    pub token_f1: f64,
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub method: String,
    pub count: usize,
    pub number_match: f64,
    pub token_f1: f64,
    pub rouge_l: f64,
}

/// Numbered context blocks separated by blank lines.
pub fn build_context(docs: &[&Document]) -> String {
    docs.iter().enumerate().map(|(i, d)| format!("Document {}:\n{}", i + 1, d.text)).collect::<Vec<_>>().join("\n\n")
}

/// Shortest decimal form of a gold answer, used as the reference string
/// for the token-overlap metrics.
pub fn format_gold(v: f64) -> String {
    format!("{v}")
}

/// Retrieves `cfg.generation_top_k` documents with `cfg.method`, asks the LLM
/// for an answer and scores it. The oracle method supplies the gold document
/// as the only context. Records come back in query-set order.
pub fn answer_questions(cfg: &ExperimentConfig, engine: &Engine, queries: &QuerySet) -> Result<Vec<GenerationRecord>> {
    cfg.validate()?;
    engine.prepare(cfg.method, cfg)?;
    let retriever = engine.retriever(cfg.method, cfg)?;
    let corpus = engine.corpus();
    let completion = &engine.providers().completion;
    let prompts = engine.prompts();
    queries
        .queries()
        .par_iter()
        .map(|q| {
            let ranked = retrieve_with(retriever.as_deref(), &q.text, &q.gold_doc_id, cfg.generation_top_k)?;
            let docs = ranked
                .doc_ids()
                .map(|id| corpus.get(id).ok_or_else(|| Error::InvalidParam(format!("retrieved unknown doc `{id}`"))))
                .collect::<Result<Vec<_>>>()?;
            let prompt = render(&prompts.generation, &[("context", &build_context(&docs)), ("question", &q.text)]);
            let answer = completion.complete(
                &prompt,
                cfg.strategy.generation_temperature,
                cfg.strategy.generation_max_tokens,
            )?;
            let answer = answer.trim().to_string();
            let gold = format_gold(q.gold_answer);
            Ok(GenerationRecord {
                query_id: q.query_id.clone(),
                subset: q.subset,
                method: cfg.method.to_string(),
                context_doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
                number_match: number_match(&answer, q.gold_answer, &cfg.number_match),
                token_f1: token_f1(&answer, &gold),
                rouge_l: rouge_l(&answer, &gold),
                answer,
                gold_answer: q.gold_answer,
            })
        })
        .collect()
}

pub fn summarize_generation(records: &[GenerationRecord]) -> Vec<GenerationSummary> {
    let mut methods: Vec<&str> = records.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();
    methods
        .into_iter()
        .map(|m| {
            let rs: Vec<&GenerationRecord> = records.iter().filter(|r| r.method == m).collect();
            GenerationSummary {
                method: m.to_string(),
                count: rs.len(),
                number_match: mean(rs.iter().map(|r| r.number_match)),
                token_f1: mean(rs.iter().map(|r| r.token_f1)),
                rouge_l: mean(rs.iter().map(|r| r.rouge_l)),
            }
        })
        .collect()
}
