//! HTTP clients for OpenAI-compatible embedding and chat endpoints and a
//! Cohere-style rerank endpoint.

use std::env;
use std::time::Duration;

use anyhow::{bail, Context};
use ragbench_core::providers::{CompletionProvider, EmbeddingProvider, RerankDoc, RerankHit, RerankProvider};
use ragbench_core::{Error, Result};
use serde::Deserialize;
use serde_json::json;
use ureq::Agent;

/// Credential and endpoint pair read from `RAGBENCH_<NAME>_KEY` and
/// `RAGBENCH_<NAME>_ENDPOINT`.
#[derive(Clone)]
pub struct Credentials {
    pub endpoint: String,
    key: String,
}

impl std::fmt::Debug for Credentials {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Credentials").field("endpoint", &self.endpoint).field("key", &"<redacted>").finish()
    }
}

impl Credentials {
    pub fn from_env(name: &str) -> anyhow::Result<Self> {
        let key_var = format!("RAGBENCH_{name}_KEY");
        let endpoint_var = format!("RAGBENCH_{name}_ENDPOINT");
        let key =
            env::var(&key_var).with_context(|| format!("{key_var} is not set (use --offline for mock providers)"))?;
        let endpoint = env::var(&endpoint_var).with_context(|| format!("{endpoint_var} is not set"))?;
        if key.trim().is_empty() {
            bail!("{key_var} is empty");
        }
        Ok(Self { endpoint, key })
    }
}

fn agent() -> Agent {
    Agent::config_builder().timeout_global(Some(Duration::from_secs(120))).http_status_as_error(false).build().into()
}

fn post<T: for<'de> Deserialize<'de>>(agent: &Agent, creds: &Credentials, body: serde_json::Value) -> Result<T> {
    let mut resp = agent
        .post(&creds.endpoint)
        .header("Authorization", &format!("Bearer {}", creds.key))
        .header("api-key", &creds.key)
        .send_json(&body)
        .map_err(|e| Error::Provider(format!("request to {} failed: {e}", creds.endpoint)))?;
    let status = resp.status();
    if !status.is_success() {
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        let head: String = text.chars().take(300).collect();
        return Err(Error::Provider(format!("{} returned {status}: {head}", creds.endpoint)));
    }
    resp.body_mut()
        .read_json::<T>()
        .map_err(|e| Error::Provider(format!("unreadable response from {}: {e}", creds.endpoint)))
}

pub struct HttpEmbedder {
    agent: Agent,
    creds: Credentials,
    model: String,
    dimension: usize,
}

impl HttpEmbedder {
    pub fn new(creds: Credentials, model: &str, dimension: usize) -> Self {
        Self { agent: agent(), creds, model: model.to_string(), dimension }
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f32>,
}

impl EmbeddingProvider for HttpEmbedder {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        let body = json!({ "model": self.model, "input": texts });
        let mut resp: EmbeddingResponse = post(&self.agent, &self.creds, body)?;
        if resp.data.len() != texts.len() {
            return Err(Error::Provider(format!("asked for {} embeddings, got {}", texts.len(), resp.data.len())));
        }
        resp.data.sort_by_key(|d| d.index);
        Ok(resp.data.into_iter().map(|d| d.embedding).collect())
    }
}

pub struct HttpCompletion {
    agent: Agent,
    creds: Credentials,
    model: String,
}

impl HttpCompletion {
    pub fn new(creds: Credentials, model: &str) -> Self {
        Self { agent: agent(), creds, model: model.to_string() }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl CompletionProvider for HttpCompletion {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str, temperature: f64, max_tokens: u32) -> Result<String> {
        let body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": temperature,
            "max_tokens": max_tokens,
        });
        let resp: ChatResponse = post(&self.agent, &self.creds, body)?;
        let choice = resp.choices.into_iter().next().ok_or_else(|| Error::Provider("no choices returned".into()))?;
        Ok(choice.message.content.unwrap_or_default())
    }
}

pub struct HttpReranker {
    agent: Agent,
    creds: Credentials,
    model: String,
}

impl HttpReranker {
    pub fn new(creds: Credentials, model: &str) -> Self {
        Self { agent: agent(), creds, model: model.to_string() }
    }
}

#[derive(Deserialize)]
struct RerankResponse {
    results: Vec<RerankResult>,
}

#[derive(Deserialize)]
struct RerankResult {
    index: usize,
    relevance_score: f64,
}

impl RerankProvider for HttpReranker {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn rerank(&self, query: &str, documents: &[RerankDoc<'_>], top_n: usize) -> Result<Vec<RerankHit>> {
        let texts: Vec<&str> = documents.iter().map(|d| d.text).collect();
        let body = json!({ "model": self.model, "query": query, "documents": texts, "top_n": top_n });
        let resp: RerankResponse = post(&self.agent, &self.creds, body)?;
        Ok(resp.results.into_iter().map(|r| RerankHit { index: r.index, score: r.relevance_score }).collect())
    }
}
