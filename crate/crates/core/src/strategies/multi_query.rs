use std::sync::Arc;

use regex::Regex;

use super::prompts::render;
use super::{PromptLibrary, Retriever, StrategyConfig};
use crate::corpus::RankedList;
use crate::error::{Error, Result};
use crate::fusion::{rrf_fuse, RrfConfig};
use crate::providers::CompletionProvider;

/// Lines of the form `<digits>. <text>`; everything else is ignored.
/// At most `n` variants are kept.
pub fn parse_variants(completion: &str, n: usize) -> Vec<String> {
    let re = Regex::new(r"^\s*\d+\.\s+(\S.*?)\s*$").expect("static regex");
    completion.lines().filter_map(|l| re.captures(l).map(|c| c[1].to_string())).take(n).collect()
}

/// Fuses the base retriever's lists for the original query and its LLM
/// reformulations with reciprocal rank fusion.
pub struct MultiQueryRetriever {
    completion: Arc<dyn CompletionProvider>,
    base: Arc<dyn Retriever>,
    cfg: StrategyConfig,
    prompts: Arc<PromptLibrary>,
}

impl MultiQueryRetriever {
    pub fn new(
        completion: Arc<dyn CompletionProvider>,
        base: Arc<dyn Retriever>,
        cfg: StrategyConfig,
        prompts: Arc<PromptLibrary>,
    ) -> Self {
        Self { completion, base, cfg, prompts }
    }

    pub fn variants(&self, query: &str) -> Result<Vec<String>> {
        let n = self.cfg.multi_query_n.to_string();
        let prompt = render(&self.prompts.multi_query, &[("n", &n), ("query", query)]);
        let out =
            self.completion.complete(&prompt, self.cfg.multi_query_temperature, self.cfg.multi_query_max_tokens)?;
        Ok(parse_variants(&out, self.cfg.multi_query_n))
    }
}

impl Retriever for MultiQueryRetriever {
    fn name(&self) -> &str {
        "multi_query"
    }

    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let variants = self.variants(query)?;
        let original = self.base.retrieve(query, k)?;
        if variants.is_empty() {
            return Ok(original.with_source("multi_query"));
        }
        let mut lists = vec![original];
        for v in &variants {
            lists.push(self.base.retrieve(v, k)?);
        }
        let refs: Vec<&RankedList> = lists.iter().collect();
        let cfg = RrfConfig { k_rrf: self.cfg.multi_query_rrf_k };
        Ok(rrf_fuse(&refs, &cfg, k)?.with_source("multi_query"))
    }
}
