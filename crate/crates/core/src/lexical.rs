//! Okapi BM25 over an in-memory inverted index.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RankedList};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_edge_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self { lowercase: true, strip_edge_punctuation: true }
    }
}

/// Whitespace split with optional lowercasing and edge-punctuation stripping.
/// Internal punctuation (`1,234`, `10.5`) is kept.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let tok = if cfg.strip_edge_punctuation { raw.trim_matches(|c: char| !c.is_alphanumeric()) } else { raw };
            if tok.is_empty() {
                None
            } else if cfg.lowercase {
                Some(tok.to_lowercase())
            } else {
                Some(tok.to_string())
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidParam(format!("k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParam(format!("b must be in [0,1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalIndex {
    tokenizer: TokenizerConfig,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avgdl: f64,
    postings: HashMap<String, Vec<Posting>>,
}

const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct IndexDump {
    version: u32,
    tokenizer: TokenizerConfig,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: Vec<(String, Vec<Posting>)>,
}

impl LexicalIndex {
    pub fn build(corpus: &Corpus, cfg: TokenizerConfig) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        let mut doc_ids = Vec::with_capacity(corpus.len());
        for (pos, doc) in corpus.documents().iter().enumerate() {
            let tokens = tokenize(&doc.text, &cfg);
            doc_lengths.push(tokens.len() as u32);
            doc_ids.push(doc.doc_id.clone());
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting { doc: pos as u32, tf: count });
            }
        }
        // documents are visited in order, so each postings list is already sorted
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avgdl = total as f64 / doc_lengths.len() as f64;
        Ok(Self { tokenizer: cfg, doc_ids, doc_lengths, avgdl, postings })
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    pub fn num_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.df(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Raw BM25 scores for every indexed document, in corpus order.
    pub fn score_all(&self, query: &str, params: &Bm25Params) -> Vec<f64> {
        let mut scores = vec![0.0f64; self.num_docs()];
        let (k1, b) = (params.k1, params.b);
        for term in tokenize(query, &self.tokenizer) {
            let Some(list) = self.postings.get(&term) else { continue };
            let idf = self.idf(&term);
            for p in list {
                let tf = p.tf as f64;
                let dl = self.doc_lengths[p.doc as usize] as f64;
                let norm = k1 * (1.0 - b + b * dl / self.avgdl);
                scores[p.doc as usize] += idf * tf * (k1 + 1.0) / (tf + norm);
            }
        }
        scores
    }

    /// Top-`k` documents by BM25; zero-score documents are left out.
    pub fn search(&self, query: &str, params: &Bm25Params, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        params.validate()?;
        let scores = self.score_all(query, params);
        let hits = scores.into_iter().enumerate().filter(|(_, s)| *s > 0.0).map(|(i, s)| (self.doc_ids[i].clone(), s));
        RankedList::from_scores("bm25", hits, k)
    }

    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        let mut postings: Vec<(String, Vec<Posting>)> =
            self.postings.iter().map(|(t, p)| (t.clone(), p.clone())).collect();
        postings.sort_by(|a, b| a.0.cmp(&b.0));
        let dump = IndexDump {
            version: INDEX_FORMAT_VERSION,
            tokenizer: self.tokenizer,
            doc_ids: self.doc_ids.clone(),
            doc_lengths: self.doc_lengths.clone(),
            postings,
        };
        serde_json::to_writer(out, &dump)?;
        Ok(())
    }

    pub fn load<R: Read>(input: R) -> Result<Self> {
        let dump: IndexDump = serde_json::from_reader(input)?;
        if dump.version != INDEX_FORMAT_VERSION {
            return Err(Error::InvalidParam(format!("unsupported index version {}", dump.version)));
        }
        if dump.doc_lengths.is_empty() || dump.doc_lengths.len() != dump.doc_ids.len() {
            return Err(Error::InvalidParam("index dump has inconsistent document tables".into()));
        }
        let total: u64 = dump.doc_lengths.iter().map(|&l| l as u64).sum();
        Ok(Self {
            tokenizer: dump.tokenizer,
            avgdl: total as f64 / dump.doc_lengths.len() as f64,
            doc_ids: dump.doc_ids,
            doc_lengths: dump.doc_lengths,
            postings: dump.postings.into_iter().collect(),
        })
    }
}
