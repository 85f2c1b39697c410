use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use tracing::info;

use super::config::{ExperimentConfig, Method};
use crate::corpus::{Corpus, QuerySet, RankedList, ScoredDoc};
use crate::error::{Error, Result};
use crate::lexical::{LexicalIndex, TokenizerConfig};
use crate::providers::{
    cached_embed, offline_completion, oracle_reranker, CallLedger, CompletionProvider, EmbeddingCache,
    EmbeddingProvider, HashEmbedder, Metered, RerankProvider,
};
use crate::strategies::{
    contextualize_corpus, Bm25Retriever, CragRetriever, DenseRetriever, Fusion, HybridRetriever, HydeRetriever,
    MultiQueryRetriever, PromptLibrary, Retriever, TwoStageRetriever,
};
use crate::vector::VectorIndex;

/// The three external services plus the ledger their calls are written to.
#[derive(Clone)]
pub struct Providers {
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub completion: Arc<dyn CompletionProvider>,
    pub reranker: Arc<dyn RerankProvider>,
    pub ledger: Arc<CallLedger>,
}

impl Providers {
    /// Deterministic local doubles, metered into a fresh ledger. The reranker
    /// knows the gold document of every query in `queries`.
    pub fn offline(cfg: &ExperimentConfig, queries: &QuerySet) -> Self {
        let ledger = CallLedger::new();
        let dim = cfg.providers.embed_dimension;
        let gold: HashMap<String, String> =
            queries.queries().iter().map(|q| (q.text.clone(), q.gold_doc_id.clone())).collect();
        Self {
            embedder: Arc::new(Metered::new(
                HashEmbedder::new(&format!("hash-trigram-{dim}"), dim, cfg.seed),
                ledger.clone(),
            )),
            completion: Arc::new(Metered::new(offline_completion("offline-scripted"), ledger.clone())),
            reranker: Arc::new(Metered::new(oracle_reranker(gold), ledger.clone())),
            ledger,
        }
    }
}

#[derive(Default)]
struct Slots {
    lexical: Mutex<Option<Arc<LexicalIndex>>>,
    vector: Mutex<Option<Arc<VectorIndex>>>,
}

fn get_or_build<T>(slot: &Mutex<Option<Arc<T>>>, build: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
    let mut guard = slot.lock().expect("index slot poisoned");
    if let Some(v) = guard.as_ref() {
        return Ok(v.clone());
    }
    let v = Arc::new(build()?);
    *guard = Some(v.clone());
    Ok(v)
}

/// Owns the corpus, providers and lazily built indexes, and assembles a
/// retriever for any configured method.
pub struct Engine {
    corpus: Arc<Corpus>,
    contextual: Mutex<Option<Arc<Corpus>>>,
    providers: Providers,
    cache: Arc<EmbeddingCache>,
    prompts: Arc<PromptLibrary>,
    tokenizer: TokenizerConfig,
    plain: Slots,
    ctx: Slots,
}

impl Engine {
    pub fn new(
        corpus: Arc<Corpus>,
        providers: Providers,
        cache: Arc<EmbeddingCache>,
        prompts: Arc<PromptLibrary>,
    ) -> Self {
        Self {
            corpus,
            contextual: Mutex::new(None),
            providers,
            cache,
            prompts,
            tokenizer: TokenizerConfig::default(),
            plain: Slots::default(),
            ctx: Slots::default(),
        }
    }

    pub fn with_tokenizer(mut self, cfg: TokenizerConfig) -> Self {
        self.tokenizer = cfg;
        self
    }

    /// Supplies a contextualized corpus produced earlier, so contextual
    /// methods do not regenerate summaries.
    pub fn with_contextual_corpus(self, corpus: Arc<Corpus>) -> Result<Self> {
        if !corpus.is_contextualized() || corpus.len() != self.corpus.len() {
            return Err(Error::InvalidParam("contextual corpus must be a contextualized copy of the corpus".into()));
        }
        *self.contextual.lock().expect("poisoned") = Some(corpus);
        Ok(self)
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn providers(&self) -> &Providers {
        &self.providers
    }

    pub fn cache(&self) -> &Arc<EmbeddingCache> {
        &self.cache
    }

    pub fn prompts(&self) -> &Arc<PromptLibrary> {
        &self.prompts
    }

    pub fn contextual_corpus(&self, cfg: &ExperimentConfig) -> Result<Arc<Corpus>> {
        get_or_build(&self.contextual, || {
            info!(docs = self.corpus.len(), "contextualizing corpus");
            contextualize_corpus(&self.corpus, self.providers.completion.as_ref(), &cfg.strategy, &self.prompts)
        })
    }

    fn slots(&self, contextual: bool) -> &Slots {
        if contextual {
            &self.ctx
        } else {
            &self.plain
        }
    }

    fn corpus_for(&self, contextual: bool, cfg: &ExperimentConfig) -> Result<Arc<Corpus>> {
        if contextual {
            self.contextual_corpus(cfg)
        } else {
            Ok(self.corpus.clone())
        }
    }

    pub fn lexical_index(&self, contextual: bool, cfg: &ExperimentConfig) -> Result<Arc<LexicalIndex>> {
        let corpus = self.corpus_for(contextual, cfg)?;
        get_or_build(&self.slots(contextual).lexical, || LexicalIndex::build(&corpus, self.tokenizer))
    }

    pub fn vector_index(&self, contextual: bool, cfg: &ExperimentConfig) -> Result<Arc<VectorIndex>> {
        let corpus = self.corpus_for(contextual, cfg)?;
        get_or_build(&self.slots(contextual).vector, || {
            info!(docs = corpus.len(), contextual, "embedding corpus");
            let texts: Vec<String> = corpus.documents().iter().map(|d| d.text.clone()).collect();
            let mut vectors = Vec::with_capacity(texts.len());
            for batch in texts.chunks(cfg.providers.embed_batch_size) {
                vectors.extend(cached_embed(self.providers.embedder.as_ref(), &self.cache, batch)?);
            }
            VectorIndex::build(corpus.documents().iter().map(|d| d.doc_id.clone()).zip(vectors))
        })
    }

    /// Builds every index `method` depends on, so that later retrieval only
    /// makes query-time provider calls.
    pub fn prepare(&self, method: Method, cfg: &ExperimentConfig) -> Result<()> {
        if method == Method::Oracle {
            return Ok(());
        }
        let ctx = method.is_contextual();
        if method.needs_lexical() {
            self.lexical_index(ctx, cfg)?;
        }
        if method.needs_embeddings() {
            self.vector_index(ctx, cfg)?;
        }
        Ok(())
    }

    fn sparse(&self, contextual: bool, cfg: &ExperimentConfig) -> Result<Arc<dyn Retriever>> {
        Ok(Arc::new(Bm25Retriever::new(self.lexical_index(contextual, cfg)?, cfg.bm25)))
    }

    fn dense(&self, contextual: bool, cfg: &ExperimentConfig) -> Result<Arc<DenseRetriever>> {
        Ok(Arc::new(DenseRetriever::new(
            self.providers.embedder.clone(),
            self.cache.clone(),
            self.vector_index(contextual, cfg)?,
        )))
    }

    fn hybrid(&self, contextual: bool, fusion: Fusion, cfg: &ExperimentConfig) -> Result<Arc<dyn Retriever>> {
        let depth = cfg.first_stage_depth.unwrap_or(self.corpus.len());
        Ok(Arc::new(HybridRetriever::new(self.sparse(contextual, cfg)?, self.dense(contextual, cfg)?, fusion, depth)))
    }

    /// The retriever for `method`, or `None` for the oracle, which needs the
    /// gold label and is handled by [`Engine::retrieve`].
    pub fn retriever(&self, method: Method, cfg: &ExperimentConfig) -> Result<Option<Arc<dyn Retriever>>> {
        let rrf = Fusion::Rrf(cfg.rrf);
        let r: Arc<dyn Retriever> = match method {
            Method::Oracle => return Ok(None),
            Method::Bm25 => self.sparse(false, cfg)?,
            Method::Dense => self.dense(false, cfg)?,
            Method::HybridRrf => self.hybrid(false, rrf, cfg)?,
            Method::HybridCc => self.hybrid(false, Fusion::Convex(cfg.convex), cfg)?,
            Method::HybridRerank => Arc::new(TwoStageRetriever::new(
                self.hybrid(false, rrf, cfg)?,
                self.providers.reranker.clone(),
                self.corpus.clone(),
                &cfg.strategy,
            )),
            Method::Hyde => Arc::new(HydeRetriever::new(
                self.providers.completion.clone(),
                self.dense(false, cfg)?,
                cfg.strategy.clone(),
                self.prompts.clone(),
            )),
            Method::MultiQuery => Arc::new(MultiQueryRetriever::new(
                self.providers.completion.clone(),
                self.dense(false, cfg)?,
                cfg.strategy.clone(),
                self.prompts.clone(),
            )),
            Method::ContextualDense => self.dense(true, cfg)?,
            Method::ContextualHybrid => self.hybrid(true, rrf, cfg)?,
            Method::Crag => Arc::new(CragRetriever::new(
                self.hybrid(false, rrf, cfg)?,
                self.providers.completion.clone(),
                self.corpus.clone(),
                cfg.strategy.clone(),
                self.prompts.clone(),
            )),
        };
        Ok(Some(r))
    }
}

/// Runs one query through `retriever`, or returns the gold document alone
/// when `retriever` is `None`.
pub fn retrieve_with(retriever: Option<&dyn Retriever>, text: &str, gold: &str, k: usize) -> Result<RankedList> {
    match retriever {
        Some(r) => r.retrieve(text, k),
        None => RankedList::from_sorted("oracle", vec![ScoredDoc { doc_id: gold.to_string(), score: 1.0 }]),
    }
}
