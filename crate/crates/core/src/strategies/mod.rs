//! Retrievers: the plain sparse/dense/hybrid ones and the LLM-assisted
//! strategies composed on top of them.

mod contextual;
mod crag;
mod hyde;
mod multi_query;
pub mod prompts;
mod rerank;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::RankedList;
use crate::error::{Error, Result};
use crate::fusion::{convex_fuse, rrf_fuse, ConvexConfig, RrfConfig};
use crate::lexical::{Bm25Params, LexicalIndex};
use crate::providers::{cached_embed, EmbeddingCache, EmbeddingProvider};
use crate::vector::VectorIndex;

pub use contextual::{contextualize_corpus, CONTEXT_SEPARATOR};
pub use crag::{parse_relevance, CragOutcome, CragRetriever, RelevanceLabel};
pub use hyde::HydeRetriever;
pub use multi_query::{parse_variants, MultiQueryRetriever};
pub use prompts::PromptLibrary;
pub use rerank::TwoStageRetriever;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HydeTemplate {
    #[default]
    Primary,
    Fallback,
}

/// Knobs for the LLM-assisted strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub hyde_max_tokens: u32,
    pub hyde_temperature: f64,
    pub hyde_template: HydeTemplate,
    pub multi_query_n: usize,
    pub multi_query_rrf_k: f64,
    pub multi_query_temperature: f64,
    pub multi_query_max_tokens: u32,
    pub crag_eval_temperature: f64,
    pub crag_eval_max_tokens: u32,
    pub crag_rewrite_temperature: f64,
    pub crag_rewrite_max_tokens: u32,
    pub crag_top_k: usize,
    pub contextual_max_tokens: u32,
    pub contextual_temperature: f64,
    pub rerank_pool: usize,
    pub rerank_top_n: usize,
    pub generation_temperature: f64,
    pub generation_max_tokens: u32,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            hyde_max_tokens: 150,
            hyde_temperature: 0.0,
            hyde_template: HydeTemplate::Primary,
            multi_query_n: 3,
            multi_query_rrf_k: 60.0,
            multi_query_temperature: 0.0,
            multi_query_max_tokens: 256,
            crag_eval_temperature: 0.0,
            crag_eval_max_tokens: 16,
            crag_rewrite_temperature: 0.5,
            crag_rewrite_max_tokens: 128,
            crag_top_k: 5,
            contextual_max_tokens: 100,
            contextual_temperature: 0.0,
            rerank_pool: 50,
            rerank_top_n: 10,
            generation_temperature: 0.0,
            generation_max_tokens: 64,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("hyde_max_tokens", self.hyde_max_tokens as usize),
            ("multi_query_n", self.multi_query_n),
            ("multi_query_max_tokens", self.multi_query_max_tokens as usize),
            ("crag_eval_max_tokens", self.crag_eval_max_tokens as usize),
            ("crag_rewrite_max_tokens", self.crag_rewrite_max_tokens as usize),
            ("crag_top_k", self.crag_top_k),
            ("contextual_max_tokens", self.contextual_max_tokens as usize),
            ("rerank_pool", self.rerank_pool),
            ("rerank_top_n", self.rerank_top_n),
            ("generation_max_tokens", self.generation_max_tokens as usize),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        let temps = [
            self.hyde_temperature,
            self.multi_query_temperature,
            self.crag_eval_temperature,
            self.crag_rewrite_temperature,
            self.contextual_temperature,
            self.generation_temperature,
        ];
        if temps.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidParam("temperatures must be >= 0".into()));
        }
        if !(self.multi_query_rrf_k > 0.0) {
            return Err(Error::InvalidParam("multi_query_rrf_k must be > 0".into()));
        }
        Ok(())
    }
}

/// Anything that turns query text into a ranked list of corpus documents.
pub trait Retriever: Send + Sync {
    fn name(&self) -> &str;
    /// Returns at most `k` documents.
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList>;
}

impl<T: Retriever + ?Sized> Retriever for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        (**self).retrieve(query, k)
    }
}

pub struct Bm25Retriever {
    index: Arc<LexicalIndex>,
    params: Bm25Params,
}

impl Bm25Retriever {
    pub fn new(index: Arc<LexicalIndex>, params: Bm25Params) -> Self {
        Self { index, params }
    }
}

impl Retriever for Bm25Retriever {
    fn name(&self) -> &str {
        "bm25"
    }
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        self.index.search(query, &self.params, k)
    }
}

/// Embeds the query (through the cache) and scans the vector index.
pub struct DenseRetriever {
    embedder: Arc<dyn EmbeddingProvider>,
    cache: Arc<EmbeddingCache>,
    index: Arc<VectorIndex>,
}

impl DenseRetriever {
    pub fn new(embedder: Arc<dyn EmbeddingProvider>, cache: Arc<EmbeddingCache>, index: Arc<VectorIndex>) -> Self {
        Self { embedder, cache, index }
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f32>> {
        let mut v = cached_embed(self.embedder.as_ref(), &self.cache, &[text.to_string()])?;
        Ok(v.pop().expect("one vector per text"))
    }

    pub fn search_vector(&self, vector: &[f32], k: usize) -> Result<RankedList> {
        self.index.search(vector, k)
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }
}

impl Retriever for DenseRetriever {
    fn name(&self) -> &str {
        "dense"
    }
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let v = self.embed(query)?;
        self.index.search(&v, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fusion {
    Rrf(RrfConfig),
    Convex(ConvexConfig),
}

/// Sparse + dense fusion. Both first-stage lists are retrieved to
/// `max(depth, k)` before fusing; pass the corpus size for full lists.
pub struct HybridRetriever {
    sparse: Arc<dyn Retriever>,
    dense: Arc<dyn Retriever>,
    fusion: Fusion,
    depth: usize,
    label: &'static str,
}

impl HybridRetriever {
    pub fn new(sparse: Arc<dyn Retriever>, dense: Arc<dyn Retriever>, fusion: Fusion, depth: usize) -> Self {
        let label = match fusion {
            Fusion::Rrf(_) => "hybrid_rrf",
            Fusion::Convex(_) => "hybrid_cc",
        };
        Self { sparse, dense, fusion, depth: depth.max(1), label }
    }
}

impl Retriever for HybridRetriever {
    fn name(&self) -> &str {
        self.label
    }
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let depth = self.depth.max(k);
        let s = self.sparse.retrieve(query, depth)?;
        let d = self.dense.retrieve(query, depth)?;
        let fused = match &self.fusion {
            Fusion::Rrf(cfg) => rrf_fuse(&[&s, &d], cfg, k)?,
            Fusion::Convex(cfg) => convex_fuse(&s, &d, cfg, k)?,
        };
        Ok(fused.with_source(self.label))
    }
}


#[cfg(test)]
pub(crate) mod testkit;
