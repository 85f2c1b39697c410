use std::collections::HashSet;
use std::sync::Arc;

use super::{Retriever, StrategyConfig};
use crate::corpus::{Corpus, RankedList};
use crate::error::{Error, Result};
use crate::providers::{RerankDoc, RerankProvider};

/// First-stage candidates reordered by a cross-encoder style reranker.
/// The output is always a subset of the candidate pool.
pub struct TwoStageRetriever {
    first_stage: Arc<dyn Retriever>,
    reranker: Arc<dyn RerankProvider>,
    corpus: Arc<Corpus>,
    pool: usize,
    top_n: usize,
}

impl TwoStageRetriever {
    pub fn new(
        first_stage: Arc<dyn Retriever>,
        reranker: Arc<dyn RerankProvider>,
        corpus: Arc<Corpus>,
        cfg: &StrategyConfig,
    ) -> Self {
        Self { first_stage, reranker, corpus, pool: cfg.rerank_pool, top_n: cfg.rerank_top_n }
    }

    pub fn candidates(&self, query: &str) -> Result<RankedList> {
        self.first_stage.retrieve(query, self.pool)
    }
}

impl Retriever for TwoStageRetriever {
    fn name(&self) -> &str {
        "hybrid_rerank"
    }

    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let pool = self.candidates(query)?;
        if pool.is_empty() {
            return Ok(RankedList::empty("hybrid_rerank"));
        }
        let docs: Vec<RerankDoc<'_>> = pool
            .entries()
            .iter()
            .map(|e| {
                let doc = self
                    .corpus
                    .get(&e.doc_id)
                    .ok_or_else(|| Error::InvalidParam(format!("candidate `{}` not in corpus", e.doc_id)))?;
                Ok(RerankDoc { id: &doc.doc_id, text: &doc.text })
            })
            .collect::<Result<_>>()?;
        let hits = self.reranker.rerank(query, &docs, self.top_n)?;

        let expected = self.top_n.min(docs.len());
        if hits.len() != expected {
            return Err(Error::Provider(format!("reranker returned {} hits, expected {expected}", hits.len())));
        }
        let mut seen = HashSet::new();
        for (i, h) in hits.iter().enumerate() {
            if h.index >= docs.len() || !seen.insert(h.index) {
                return Err(Error::Provider(format!("reranker returned bad index {}", h.index)));
            }
            if !h.score.is_finite() || (i > 0 && h.score > hits[i - 1].score) {
                return Err(Error::Provider("reranker scores are not non-increasing".into()));
            }
        }
        RankedList::from_scores(
            "hybrid_rerank",
            hits.iter().map(|h| (docs[h.index].id.to_string(), h.score)),
            k.min(self.top_n),
        )
    }
}
