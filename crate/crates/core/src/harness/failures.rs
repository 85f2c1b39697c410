use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::MethodResult;
use crate::corpus::{Corpus, QuerySet};
use crate::providers::CompletionProvider;
use crate::strategies::prompts::render;

/// Depth within which the gold document must appear for a query to count
/// as a retrieval success.
pub const FAILURE_DEPTH: usize = 5;

const EXCERPT_CHARS: usize = 1500;

pub const CATEGORIZE_PROMPT: &str = "A retrieval system failed to return the gold document for a
financial question within its top 5 results.

Question: {query}

Gold document:
{gold}

Top retrieved documents:
{retrieved}

Which failure mode best explains the miss? Answer with exactly one of:
table structure mismatch, numerical reasoning, vocabulary mismatch,
ambiguous query, long document.

Category:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    TableStructureMismatch,
    NumericalReasoning,
    VocabularyMismatch,
    AmbiguousQuery,
    LongDocument,
    Uncategorized,
}

impl FailureCategory {
    pub const LABELED: [FailureCategory; 5] = [
        FailureCategory::TableStructureMismatch,
        FailureCategory::NumericalReasoning,
        FailureCategory::VocabularyMismatch,
        FailureCategory::AmbiguousQuery,
        FailureCategory::LongDocument,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::TableStructureMismatch => "table_structure_mismatch",
            FailureCategory::NumericalReasoning => "numerical_reasoning",
            FailureCategory::VocabularyMismatch => "vocabulary_mismatch",
            FailureCategory::AmbiguousQuery => "ambiguous_query",
            FailureCategory::LongDocument => "long_document",
            FailureCategory::Uncategorized => "uncategorized",
        }
    }

    fn phrase(self) -> String {
        self.as_str().replace('_', " ")
    }

    /// Maps free-form model output to a category. The text is lowercased and
    /// `_`/`-` become spaces; the category phrase occurring first wins.
    pub fn from_response(text: &str) -> Self {
        let norm = text.to_lowercase().replace(['_', '-'], " ");
        Self::LABELED
            .into_iter()
            .filter_map(|c| norm.find(&c.phrase()).map(|pos| (pos, c)))
            .min()
            .map_or(FailureCategory::Uncategorized, |(_, c)| c)
    }
}

impl fmt::Display for FailureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCase {
    pub query_id: String,
    pub gold_doc_id: String,
    pub retrieved_top5: Vec<String>,
    pub category: FailureCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Uniform sample without replacement of `min(n, failures)` queries whose
/// gold document is missing from the top 5. The failure pool is ordered by
/// query id and the sample is returned in that order.
pub fn sample_failures(result: &MethodResult, n: usize, seed: u64) -> Vec<FailureCase> {
    let pool: Vec<FailureCase> = result
        .queries
        .iter()
        .filter(|q| !q.retrieved.iter().take(FAILURE_DEPTH).any(|d| *d == q.gold_doc_id))
        .map(|q| FailureCase {
            query_id: q.query_id.clone(),
            gold_doc_id: q.gold_doc_id.clone(),
            retrieved_top5: q.retrieved.iter().take(FAILURE_DEPTH).cloned().collect(),
            category: FailureCategory::Uncategorized,
            note: None,
        })
        .collect();
    let amount = n.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, pool.len(), amount).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i].clone()).collect()
}

fn excerpt(text: &str) -> String {
    text.chars().take(EXCERPT_CHARS).collect()
}

pub fn categorization_prompt(case: &FailureCase, question: &str, corpus: &Corpus) -> String {
    let gold = corpus.get(&case.gold_doc_id).map(|d| excerpt(&d.text)).unwrap_or_default();
    let retrieved = case
        .retrieved_top5
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let text = corpus.get(id).map(|d| excerpt(&d.text)).unwrap_or_default();
            format!("{}. {text}", i + 1)
        })
        .collect::<Vec<_>>()
        .join("\n");
    render(CATEGORIZE_PROMPT, &[("query", question), ("gold", &gold), ("retrieved", &retrieved)])
}

/// Asks the LLM for a failure mode. A provider error yields
/// `Uncategorized` with the error text as a note.
pub fn categorize_failure(
    completion: &dyn CompletionProvider,
    case: &FailureCase,
    question: &str,
    corpus: &Corpus,
) -> FailureCase {
    let prompt = categorization_prompt(case, question, corpus);
    let (category, note) = match completion.complete(&prompt, 0.0, 16) {
        Ok(text) => (FailureCategory::from_response(&text), None),
        Err(e) => (FailureCategory::Uncategorized, Some(format!("provider error: {e}"))),
    };
    FailureCase { category, note, ..case.clone() }
}

/// Categorizes every case in order and returns them with a histogram.
pub fn categorize_all(
    completion: &dyn CompletionProvider,
    cases: &[FailureCase],
    queries: &QuerySet,
    corpus: &Corpus,
) -> (Vec<FailureCase>, BTreeMap<FailureCategory, usize>) {
    let text: BTreeMap<&str, &str> = queries.queries().iter().map(|q| (q.query_id.as_str(), q.text.as_str())).collect();
    let done: Vec<FailureCase> = cases
        .iter()
        .map(|c| categorize_failure(completion, c, text.get(c.query_id.as_str()).copied().unwrap_or(""), corpus))
        .collect();
    let mut hist = BTreeMap::new();
    for c in &done {
        *hist.entry(c.category).or_insert(0) += 1;
    }
    (done, hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Subset;
    use crate::harness::report::QueryRecord;

    fn result(ranks: &[(&str, Option<usize>)]) -> MethodResult {
        let rows = ranks
            .iter()
            .map(|(qid, rank)| {
                let mut retrieved: Vec<String> = (1..=10).map(|i| format!("x{i}")).collect();
                if let Some(r) = rank {
                    retrieved[r - 1] = "gold".into();
                }
                let rec = QueryRecord {
                    query_id: qid.to_string(),
                    subset: Subset::FinQA,
                    gold_doc_id: "gold".into(),
                    retrieved,
                };
                (rec, BTreeMap::from([("map".to_string(), 0.0)]))
            })
            .collect();
        MethodResult::from_rows(&[5], rows)
    }

    #[test]
    fn rank_five_is_success_rank_six_is_failure() {
        let r = result(&[("q1", Some(5)), ("q2", Some(6)), ("q3", None), ("q4", Some(1))]);
        let f = sample_failures(&r, 100, 42);
        let ids: Vec<_> = f.iter().map(|c| c.query_id.as_str()).collect();
        assert_eq!(ids, ["q2", "q3"]);
        assert!(f.iter().all(|c| c.retrieved_top5.len() == 5 && !c.retrieved_top5.contains(&c.gold_doc_id)));
    }

    #[test]
    fn sampling_is_seeded_and_bounded() {
        let ids: Vec<String> = (0..50).map(|i| format!("q{i:02}")).collect();
        let ranks: Vec<(&str, Option<usize>)> = ids.iter().map(|q| (q.as_str(), None)).collect();
        let r = result(&ranks);
        let a = sample_failures(&r, 10, 42);
        assert_eq!(a.len(), 10);
        assert_eq!(a, sample_failures(&r, 10, 42));
        assert_ne!(a, sample_failures(&r, 10, 43));
        let mut seen: Vec<_> = a.iter().map(|c| &c.query_id).collect();
        seen.dedup();
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn response_mapping() {
        assert_eq!(FailureCategory::from_response("Table structure mismatch"), FailureCategory::TableStructureMismatch);
        assert_eq!(FailureCategory::from_response("numerical_reasoning"), FailureCategory::NumericalReasoning);
        assert_eq!(FailureCategory::from_response("Long-document issue"), FailureCategory::LongDocument);
        assert_eq!(FailureCategory::from_response("none of the above"), FailureCategory::Uncategorized);
        assert_eq!(
            FailureCategory::from_response("ambiguous query, maybe vocabulary mismatch"),
            FailureCategory::AmbiguousQuery
        );
    }
}
