use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{NumberMatchConfig, DEFAULT_BOOTSTRAP_SAMPLES, DEFAULT_CUTOFFS};
use crate::fusion::{ConvexConfig, RrfConfig};
use crate::lexical::{Bm25Params, TokenizerConfig};
use crate::providers::RequestPolicy;
use crate::strategies::StrategyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bm25,
    Dense,
    HybridRrf,
    HybridCc,
    HybridRerank,
    Hyde,
    MultiQuery,
    ContextualDense,
    ContextualHybrid,
    Crag,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Bm25,
        Method::Dense,
        Method::HybridRrf,
        Method::HybridCc,
        Method::HybridRerank,
        Method::Hyde,
        Method::MultiQuery,
        Method::ContextualDense,
        Method::ContextualHybrid,
        Method::Crag,
        Method::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bm25 => "bm25",
            Method::Dense => "dense",
            Method::HybridRrf => "hybrid_rrf",
            Method::HybridCc => "hybrid_cc",
            Method::HybridRerank => "hybrid_rerank",
            Method::Hyde => "hyde",
            Method::MultiQuery => "multi_query",
            Method::ContextualDense => "contextual_dense",
            Method::ContextualHybrid => "contextual_hybrid",
            Method::Crag => "crag",
            Method::Oracle => "oracle",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        !matches!(self, Method::Bm25 | Method::Oracle)
    }

    pub fn needs_lexical(self) -> bool {
        matches!(
            self,
            Method::Bm25
                | Method::HybridRrf
                | Method::HybridCc
                | Method::HybridRerank
                | Method::ContextualHybrid
                | Method::Crag
        )
    }

    pub fn is_contextual(self) -> bool {
        matches!(self, Method::ContextualDense | Method::ContextualHybrid)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Model ids and request policy for the three external services.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderBindings {
    pub embed_model: String,
    pub embed_dimension: usize,
    pub embed_batch_size: usize,
    pub llm_model: String,
    pub rerank_model: String,
    pub policy: RequestPolicy,
}

impl Default for ProviderBindings {
    fn default() -> Self {
        Self {
            embed_model: "text-embedding-3-large".into(),
            embed_dimension: 3072,
            embed_batch_size: 64,
            llm_model: "gpt-4.1-mini".into(),
            rerank_model: "Cohere-rerank-v4.0-pro".into(),
            policy: RequestPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub contextual_corpus: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Where completed per-query records go if a run aborts.
    pub partial_results: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub seed: u64,
    pub cutoffs: Vec<usize>,
    /// Depth of each first-stage list before fusion; `None` means the whole corpus.
    pub first_stage_depth: Option<usize>,
    pub bootstrap_samples: usize,
    pub tokenizer: TokenizerConfig,
    pub bm25: Bm25Params,
    pub rrf: RrfConfig,
    pub convex: ConvexConfig,
    pub strategy: StrategyConfig,
    pub number_match: NumberMatchConfig,
    pub generation_top_k: usize,
    pub providers: ProviderBindings,
    pub paths: Paths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::HybridRrf,
            seed: 42,
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            first_stage_depth: None,
            bootstrap_samples: DEFAULT_BOOTSTRAP_SAMPLES,
            tokenizer: TokenizerConfig::default(),
            bm25: Bm25Params::default(),
            rrf: RrfConfig::default(),
            convex: ConvexConfig::default(),
            strategy: StrategyConfig::default(),
            number_match: NumberMatchConfig::default(),
            generation_top_k: 5,
            providers: ProviderBindings::default(),
            paths: Paths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn max_cutoff(&self) -> usize {
        self.cutoffs.iter().copied().max().unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return Err(Error::InvalidParam("cutoffs must be non-empty and positive".into()));
        }
        if self.first_stage_depth == Some(0) {
            return Err(Error::InvalidParam("first_stage_depth must be positive".into()));
        }
        if self.bootstrap_samples == 0 || self.generation_top_k == 0 {
            return Err(Error::InvalidParam("bootstrap_samples and generation_top_k must be positive".into()));
        }
        if !(self.number_match.epsilon > 0.0) || !self.number_match.scale_set.contains(&1.0) {
            return Err(Error::InvalidParam("number match needs epsilon > 0 and 1 in the scale set".into()));
        }
        if !(self.rrf.k_rrf > 0.0) {
            return Err(Error::InvalidParam("rrf.k_rrf must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.convex.alpha) {
            return Err(Error::InvalidParam("convex.alpha must be in [0,1]".into()));
        }
        if self.providers.embed_dimension == 0 || self.providers.embed_batch_size == 0 {
            return Err(Error::InvalidParam("embedding dimension and batch size must be positive".into()));
        }
        self.bm25.validate()?;
        self.strategy.validate()?;
        self.providers.policy.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!(matches!("bm26".parse::<Method>(), Err(Error::UnknownMethod(s)) if s == "bm26"));
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.seed, 42);
        assert_eq!(c.cutoffs, [1, 3, 5, 10, 20]);
        assert_eq!(c.bootstrap_samples, 10_000);
        assert_eq!(c.rrf.k_rrf, 60.0);
        assert_eq!(c.convex.alpha, 0.5);
        assert_eq!(c.providers.embed_dimension, 3072);
        c.validate().unwrap();
        let bad = ExperimentConfig { cutoffs: vec![0], ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"method":"bm25","rrf":{"k_rrf":10}}"#).unwrap();
        assert_eq!(c.method, Method::Bm25);
        assert_eq!(c.rrf.k_rrf, 10.0);
        assert_eq!(c.seed, 42);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"method":"bm26"}"#).is_err());
    }

    #[test]
    fn misspelled_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sead":1}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"strategy":{"rerank_pol":5}}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"providers":{"policy":{"retries":5}}}"#).is_err());
    }
}
