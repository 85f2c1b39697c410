//! Shared fixtures for strategy unit tests.

use std::sync::Arc;

use super::{Bm25Retriever, DenseRetriever, Fusion, HybridRetriever, PromptLibrary, Retriever};
use crate::corpus::{Corpus, Document, Subset};
use crate::fusion::RrfConfig;
use crate::lexical::{Bm25Params, LexicalIndex, TokenizerConfig};
use crate::providers::{
    cached_embed, hash_embedder, CallLedger, CompletionProvider, EmbeddingCache, EmbeddingProvider, Metered,
    ScriptedCompletion,
};
use crate::vector::VectorIndex;

const TEXTS: [&str; 12] = [
    "ACME Corp annual report 2019 revenue 4,512 million net income 610 million",
    "ACME Corp annual report 2018 revenue 4,100 million net income 540 million",
    "Globex pension liability 2018 discount rate 3.9 percent funded status",
    "Globex segment table | region | sales | 2019 | 2018 | americas 1,200 | emea 800",
    "Initech share repurchase program 2020 authorized 2 billion buybacks",
    "Initech operating lease obligations table maturities 2021 through 2025",
    "Umbrella goodwill impairment test 2019 reporting units fair value",
    "Umbrella effective tax rate reconciliation 2019 statutory 21 percent",
    "Hooli cash flow statement 2017 capital expenditures 950 million",
    "Hooli debt maturities senior notes 2022 interest 4.25 percent",
    "Stark inventory valuation lifo reserve 2016 raw materials",
    "Wayne dividends declared per share 2019 quarterly 0.45",
];

pub(crate) struct Kit {
    pub corpus: Arc<Corpus>,
    pub ledger: Arc<CallLedger>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub cache: Arc<EmbeddingCache>,
    pub vindex: Arc<VectorIndex>,
    pub lindex: Arc<LexicalIndex>,
}

impl Kit {
    pub fn new() -> Self {
        let docs =
            TEXTS.iter().enumerate().map(|(i, t)| Document::new(format!("d{i:02}"), *t, Subset::FinQA)).collect();
        Self::from_corpus(Corpus::from_documents(docs).unwrap())
    }

    pub fn from_corpus(corpus: Corpus) -> Self {
        let ledger = CallLedger::new();
        let embedder: Arc<dyn EmbeddingProvider> = Arc::new(Metered::new(hash_embedder("hash", 128), ledger.clone()));
        let cache = Arc::new(EmbeddingCache::new());
        let texts: Vec<String> = corpus.documents().iter().map(|d| d.text.clone()).collect();
        let vecs = cached_embed(embedder.as_ref(), &cache, &texts).unwrap();
        let vindex = VectorIndex::build(corpus.documents().iter().map(|d| d.doc_id.clone()).zip(vecs)).unwrap();
        let lindex = LexicalIndex::build(&corpus, TokenizerConfig::default()).unwrap();
        ledger.reset();
        Self { corpus: Arc::new(corpus), ledger, embedder, cache, vindex: Arc::new(vindex), lindex: Arc::new(lindex) }
    }

    pub fn dense(&self) -> Arc<DenseRetriever> {
        Arc::new(DenseRetriever::new(self.embedder.clone(), self.cache.clone(), self.vindex.clone()))
    }

    pub fn bm25(&self) -> Arc<dyn Retriever> {
        Arc::new(Bm25Retriever::new(self.lindex.clone(), Bm25Params::default()))
    }

    pub fn hybrid(&self) -> Arc<dyn Retriever> {
        Arc::new(HybridRetriever::new(self.bm25(), self.dense(), Fusion::Rrf(RrfConfig::default()), self.corpus.len()))
    }

    pub fn metered_llm(&self, llm: ScriptedCompletion) -> Arc<dyn CompletionProvider> {
        Arc::new(Metered::new(llm, self.ledger.clone()))
    }

    pub fn prompts(&self) -> Arc<PromptLibrary> {
        Arc::new(PromptLibrary::default())
    }
}
