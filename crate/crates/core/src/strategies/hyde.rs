use std::sync::Arc;

use super::prompts::render;
use super::{DenseRetriever, HydeTemplate, PromptLibrary, Retriever, StrategyConfig};
use crate::corpus::RankedList;
use crate::error::{Error, Result};
use crate::providers::CompletionProvider;

/// Retrieves with the embedding of an LLM-written answer passage instead of
/// the query. An empty passage falls back to the query embedding.
pub struct HydeRetriever {
    completion: Arc<dyn CompletionProvider>,
    dense: Arc<DenseRetriever>,
    cfg: StrategyConfig,
    prompts: Arc<PromptLibrary>,
}

impl HydeRetriever {
    pub fn new(
        completion: Arc<dyn CompletionProvider>,
        dense: Arc<DenseRetriever>,
        cfg: StrategyConfig,
        prompts: Arc<PromptLibrary>,
    ) -> Self {
        Self { completion, dense, cfg, prompts }
    }

    /// The passage the LLM produced for `query`.
    pub fn passage(&self, query: &str) -> Result<String> {
        let template = match self.cfg.hyde_template {
            HydeTemplate::Primary => &self.prompts.hyde,
            HydeTemplate::Fallback => &self.prompts.hyde_fallback,
        };
        let prompt = render(template, &[("query", query)]);
        self.completion.complete(&prompt, self.cfg.hyde_temperature, self.cfg.hyde_max_tokens)
    }
}

impl Retriever for HydeRetriever {
    fn name(&self) -> &str {
        "hyde"
    }

    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let passage = self.passage(query)?;
        let text = if passage.trim().is_empty() { query } else { passage.trim() };
        let v = self.dense.embed(text)?;
        Ok(self.dense.search_vector(&v, k)?.with_source("hyde"))
    }
}
