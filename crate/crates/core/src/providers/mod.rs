//! External service contracts (embedding, completion, rerank) and the
//! plumbing around them: call accounting, retry and rate limiting, an
//! on-disk embedding cache, and deterministic offline doubles.

mod cache;
mod mock;
mod retry;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use cache::{cache_key, cached_embed, EmbeddingCache, CACHE_MAGIC, CACHE_VERSION};
pub use mock::{
    hash_embedder, offline_completion, oracle_reranker, HashEmbedder, OracleReranker, Response, ScriptedCompletion,
};
pub use retry::{with_retry, Attempted, Clock, RateLimiter, RequestPolicy, Resilient, SimulatedClock, SystemClock};

pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;
    fn dimension(&self) -> usize;
    /// One vector per input text, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;
}

pub trait CompletionProvider: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, prompt: &str, temperature: f64, max_tokens: u32) -> Result<String>;
}

#[derive(Debug, Clone, Copy)]
pub struct RerankDoc<'a> {
    pub id: &'a str,
    pub text: &'a str,
}

/// `index` points into the documents slice passed to [`RerankProvider::rerank`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RerankHit {
    pub index: usize,
    pub score: f64,
}

pub trait RerankProvider: Send + Sync {
    fn model_id(&self) -> &str;
    /// At most `top_n` hits ordered by non-increasing score.
    fn rerank(&self, query: &str, documents: &[RerankDoc<'_>], top_n: usize) -> Result<Vec<RerankHit>>;
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<T> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        (**self).embed(texts)
    }
}

impl<T: CompletionProvider + ?Sized> CompletionProvider for Arc<T> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn complete(&self, prompt: &str, temperature: f64, max_tokens: u32) -> Result<String> {
        (**self).complete(prompt, temperature, max_tokens)
    }
}

impl<T: RerankProvider + ?Sized> RerankProvider for Arc<T> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn rerank(&self, query: &str, documents: &[RerankDoc<'_>], top_n: usize) -> Result<Vec<RerankHit>> {
        (**self).rerank(query, documents, top_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Embed,
    Complete,
    Rerank,
}

impl CallKind {
    fn as_str(self) -> &'static str {
        match self {
            CallKind::Embed => "embed",
            CallKind::Complete => "complete",
            CallKind::Rerank => "rerank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub kind: CallKind,
    pub model_id: String,
    /// Texts embedded or documents reranked; 1 for completions.
    pub items: usize,
    pub payload_bytes: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub calls: usize,
    pub items: usize,
    pub payload_bytes: usize,
}

/// Append-only log of every call that reached a provider.
#[derive(Debug, Default)]
pub struct CallLedger {
    records: Mutex<Vec<CallRecord>>,
}

impl CallLedger {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn record(&self, rec: CallRecord) {
        self.records.lock().expect("ledger poisoned").push(rec);
    }

    /// Records in a canonical order, independent of thread interleaving.
    pub fn records(&self) -> Vec<CallRecord> {
        let mut recs = self.records.lock().expect("ledger poisoned").clone();
        recs.sort_by(|a, b| {
            (a.kind, &a.model_id, a.items, a.payload_bytes).cmp(&(b.kind, &b.model_id, b.items, b.payload_bytes))
        });
        recs
    }

    pub fn count(&self, kind: CallKind) -> usize {
        self.records.lock().expect("ledger poisoned").iter().filter(|r| r.kind == kind).count()
    }

    pub fn total_calls(&self) -> usize {
        self.records.lock().expect("ledger poisoned").len()
    }

    /// Totals keyed by `kind:model_id`.
    pub fn summary(&self) -> BTreeMap<String, LedgerTotals> {
        self.summary_since(0)
    }

    /// Like [`summary`](Self::summary) over the calls recorded after the
    /// first `start` (see [`total_calls`](Self::total_calls)).
    pub fn summary_since(&self, start: usize) -> BTreeMap<String, LedgerTotals> {
        let mut out: BTreeMap<String, LedgerTotals> = BTreeMap::new();
        for r in self.records.lock().expect("ledger poisoned").iter().skip(start) {
            let t = out.entry(format!("{}:{}", r.kind.as_str(), r.model_id)).or_default();
            t.calls += 1;
            t.items += r.items;
            t.payload_bytes += r.payload_bytes;
        }
        out
    }

    pub fn reset(&self) {
        self.records.lock().expect("ledger poisoned").clear();
    }
}

/// Wraps a provider and logs each call it receives into a [`CallLedger`].
pub struct Metered<P> {
    inner: P,
    ledger: Arc<CallLedger>,
}

impl<P> Metered<P> {
    pub fn new(inner: P, ledger: Arc<CallLedger>) -> Self {
        Self { inner, ledger }
    }

    pub fn ledger(&self) -> &Arc<CallLedger> {
        &self.ledger
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for Metered<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        self.ledger.record(CallRecord {
            kind: CallKind::Embed,
            model_id: self.inner.model_id().to_string(),
            items: texts.len(),
            payload_bytes: texts.iter().map(String::len).sum(),
        });
        self.inner.embed(texts)
    }
}

impl<P: CompletionProvider> CompletionProvider for Metered<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
    fn complete(&self, prompt: &str, temperature: f64, max_tokens: u32) -> Result<String> {
        self.ledger.record(CallRecord {
            kind: CallKind::Complete,
            model_id: self.inner.model_id().to_string(),
            items: 1,
            payload_bytes: prompt.len(),
        });
        self.inner.complete(prompt, temperature, max_tokens)
    }
}

impl<P: RerankProvider> RerankProvider for Metered<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
    fn rerank(&self, query: &str, documents: &[RerankDoc<'_>], top_n: usize) -> Result<Vec<RerankHit>> {
        self.ledger.record(CallRecord {
            kind: CallKind::Rerank,
            model_id: self.inner.model_id().to_string(),
            items: documents.len(),
            payload_bytes: query.len() + documents.iter().map(|d| d.text.len()).sum::<usize>(),
        });
        self.inner.rerank(query, documents, top_n)
    }
}
