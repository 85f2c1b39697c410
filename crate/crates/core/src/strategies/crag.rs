use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::prompts::render;
use super::{PromptLibrary, Retriever, StrategyConfig};
use crate::corpus::{Corpus, RankedList};
use crate::error::{Error, Result};
use crate::providers::CompletionProvider;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelevanceLabel {
    Relevant,
    Ambiguous,
    Irrelevant,
}

/// Earliest case-sensitive occurrence of a label word wins; no label at all
/// reads as `Ambiguous`. `IRRELEVANT` starts before the `RELEVANT` inside it.
pub fn parse_relevance(text: &str) -> RelevanceLabel {
    [
        ("IRRELEVANT", RelevanceLabel::Irrelevant),
        ("RELEVANT", RelevanceLabel::Relevant),
        ("AMBIGUOUS", RelevanceLabel::Ambiguous),
    ]
    .into_iter()
    .filter_map(|(word, label)| text.find(word).map(|pos| (pos, label)))
    .min_by_key(|(pos, _)| *pos)
    .map_or(RelevanceLabel::Ambiguous, |(_, label)| label)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CragOutcome {
    pub result: RankedList,
    pub first_labels: Vec<RelevanceLabel>,
    pub rewritten: Option<String>,
    pub second_labels: Option<Vec<RelevanceLabel>>,
    /// 1 or 2.
    pub chosen_round: u8,
}

fn relevant_count(labels: &[RelevanceLabel]) -> usize {
    labels.iter().filter(|l| **l == RelevanceLabel::Relevant).count()
}

/// Corrective retrieval: grade the first round, rewrite the query when
/// nothing is graded relevant, and keep whichever round has more relevant
/// documents (ties keep round one).
pub struct CragRetriever {
    first_stage: Arc<dyn Retriever>,
    completion: Arc<dyn CompletionProvider>,
    corpus: Arc<Corpus>,
    cfg: StrategyConfig,
    prompts: Arc<PromptLibrary>,
}

impl CragRetriever {
    pub fn new(
        first_stage: Arc<dyn Retriever>,
        completion: Arc<dyn CompletionProvider>,
        corpus: Arc<Corpus>,
        cfg: StrategyConfig,
        prompts: Arc<PromptLibrary>,
    ) -> Self {
        Self { first_stage, completion, corpus, cfg, prompts }
    }

    fn grade(&self, query: &str, list: &RankedList) -> Result<Vec<RelevanceLabel>> {
        list.entries()
            .iter()
            .take(self.cfg.crag_top_k)
            .map(|e| {
                let doc = self
                    .corpus
                    .get(&e.doc_id)
                    .ok_or_else(|| Error::InvalidParam(format!("retrieved unknown doc `{}`", e.doc_id)))?;
                let prompt = render(&self.prompts.crag_eval, &[("query", query), ("document", &doc.text)]);
                let out =
                    self.completion.complete(&prompt, self.cfg.crag_eval_temperature, self.cfg.crag_eval_max_tokens)?;
                Ok(parse_relevance(&out))
            })
            .collect()
    }

    /// Runs both rounds as needed and reports what happened.
    pub fn run(&self, query: &str, k: usize) -> Result<CragOutcome> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let depth = k.max(self.cfg.crag_top_k);
        let mut first = self.first_stage.retrieve(query, depth)?;
        let first_labels = self.grade(query, &first)?;
        first.truncate(k);
        let keep_first = |first: RankedList, first_labels, rewritten, second_labels| CragOutcome {
            result: first.with_source("crag"),
            first_labels,
            rewritten,
            second_labels,
            chosen_round: 1,
        };
        if relevant_count(&first_labels) > 0 {
            return Ok(keep_first(first, first_labels, None, None));
        }
        let prompt = render(&self.prompts.crag_rewrite, &[("query", query)]);
        let rewritten = self
            .completion
            .complete(&prompt, self.cfg.crag_rewrite_temperature, self.cfg.crag_rewrite_max_tokens)?
            .trim()
            .to_string();
        if rewritten.is_empty() {
            return Ok(keep_first(first, first_labels, None, None));
        }
        let mut second = self.first_stage.retrieve(&rewritten, depth)?;
        // grading uses the original question; the rewrite only steers retrieval
        let second_labels = self.grade(query, &second)?;
        second.truncate(k);
        if relevant_count(&second_labels) > relevant_count(&first_labels) {
            Ok(CragOutcome {
                result: second.with_source("crag"),
                first_labels,
                rewritten: Some(rewritten),
                second_labels: Some(second_labels),
                chosen_round: 2,
            })
        } else {
            Ok(keep_first(first, first_labels, Some(rewritten), Some(second_labels)))
        }
    }
}

impl Retriever for CragRetriever {
    fn name(&self) -> &str {
        "crag"
    }

    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        Ok(self.run(query, k)?.result)
    }
}
