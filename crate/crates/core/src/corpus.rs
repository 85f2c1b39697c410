//! Documents, queries and the ranked-list type shared by every retriever.
//!
//! Records are read from line-delimited JSON. Documents need `doc_id`, `text`
//! and `subset`; queries need `query_id`, `text`, `gold_doc_id`, `gold_answer`
//! and `subset`. Unknown fields are ignored.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Source dataset a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subset {
    FinQA,
    ConvFinQA,
    TATDQA,
    Other,
}

impl Subset {
    pub const ALL: [Subset; 4] = [Subset::FinQA, Subset::ConvFinQA, Subset::TATDQA, Subset::Other];

    /// Lenient label parsing; anything unrecognised becomes [`Subset::Other`].
    pub fn parse(label: &str) -> Self {
        let norm: String =
            label.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect();
        match norm.as_str() {
            "finqa" => Subset::FinQA,
            "convfinqa" => Subset::ConvFinQA,
            "tatdqa" => Subset::TATDQA,
            _ => Subset::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::FinQA => "FinQA",
            Subset::ConvFinQA => "ConvFinQA",
            Subset::TATDQA => "TATDQA",
            Subset::Other => "Other",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whitespace token count, the single length definition used across the crate.
pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub subset: Subset,
    pub token_count: usize,
    /// Set once an LLM context summary has been prepended to `text`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub contextualized: bool,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, subset: Subset) -> Self {
        let text = text.into();
        Self { doc_id: doc_id.into(), token_count: whitespace_token_count(&text), text, subset, contextualized: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
    pub gold_doc_id: String,
    pub gold_answer: f64,
    pub subset: Subset,
}

/// Ordered document collection with an id index. Immutable once built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, enforcing unique non-empty ids and non-empty text.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        let mut index = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(Error::MalformedRecord { index: i, reason: "empty doc_id".into() });
            }
            if doc.text.trim().is_empty() {
                return Err(Error::EmptyText { index: i, id: doc.doc_id.clone() });
            }
            if index.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateId { index: i, id: doc.doc_id.clone() });
            }
        }
        Ok(Self { documents, index })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    pub fn is_contextualized(&self) -> bool {
        self.documents.iter().any(|d| d.contextualized)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for doc in &self.documents {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuerySet {
    queries: Vec<Query>,
}

impl QuerySet {
    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Validates already-constructed queries against `corpus`.
    pub fn new(queries: Vec<Query>, corpus: &Corpus) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, q) in queries.iter().enumerate() {
            if !seen.insert(q.query_id.as_str()) {
                return Err(Error::DuplicateId { index: i, id: q.query_id.clone() });
            }
            if corpus.get(&q.gold_doc_id).is_none() {
                return Err(Error::UnknownGold { index: i, gold: q.gold_doc_id.clone() });
            }
            if !q.gold_answer.is_finite() {
                return Err(Error::NonNumericAnswer { index: i, raw: q.gold_answer.to_string() });
            }
        }
        Ok(Self { queries })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for q in &self.queries {
            serde_json::to_writer(&mut out, q)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn parse_line(index: usize, line: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::MalformedRecord { index, reason: "record is not an object".into() }),
        Err(e) => Err(Error::MalformedRecord { index, reason: e.to_string() }),
    }
}

fn string_field(index: usize, rec: &Map<String, Value>, name: &str) -> Result<String> {
    match rec.get(name) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(_) => Err(Error::MalformedRecord { index, reason: format!("field `{name}` is not a string") }),
        None => Err(Error::MalformedRecord { index, reason: format!("missing field `{name}`") }),
    }
}

fn records<R: BufRead>(source: R) -> impl Iterator<Item = Result<(usize, String)>> {
    source.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i, l))),
        Err(e) => Some(Err(Error::Io(e))),
    })
}

/// Loads documents from a line-delimited record stream. Errors carry the
/// zero-based line index of the offending record.
pub fn load_corpus<R: BufRead>(source: R) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for item in records(source) {
        let (index, line) = item?;
        let rec = parse_line(index, &line)?;
        let doc_id = string_field(index, &rec, "doc_id")?;
        let text = string_field(index, &rec, "text")?;
        let subset = Subset::parse(&string_field(index, &rec, "subset")?);
        let contextualized = matches!(rec.get("contextualized"), Some(Value::Bool(true)));
        if doc_id.is_empty() {
            return Err(Error::MalformedRecord { index, reason: "empty doc_id".into() });
        }
        if text.trim().is_empty() {
            return Err(Error::EmptyText { index, id: doc_id });
        }
        if seen.insert(doc_id.clone(), index).is_some() {
            return Err(Error::DuplicateId { index, id: doc_id });
        }
        let mut doc = Document::new(doc_id, text, subset);
        doc.contextualized = contextualized;
        docs.push(doc);
    }
    Corpus::from_documents(docs)
}

/// Loads queries and resolves each gold document against `corpus`.
pub fn load_queries<R: BufRead>(source: R, corpus: &Corpus) -> Result<QuerySet> {
    let mut queries = Vec::new();
    let mut seen = HashSet::new();
    for item in records(source) {
        let (index, line) = item?;
        let rec = parse_line(index, &line)?;
        let query_id = string_field(index, &rec, "query_id")?;
        let text = string_field(index, &rec, "text")?;
        let gold_doc_id = string_field(index, &rec, "gold_doc_id")?;
        let subset = Subset::parse(&string_field(index, &rec, "subset")?);
        let gold_answer = match rec.get("gold_answer") {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
            Some(_) => None,
            None => return Err(Error::MalformedRecord { index, reason: "missing field `gold_answer`".into() }),
        };
        let gold_answer = match gold_answer {
            Some(v) if v.is_finite() => v,
            _ => {
                let raw = rec.get("gold_answer").map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                });
                return Err(Error::NonNumericAnswer { index, raw: raw.unwrap_or_default() });
            }
        };
        if !seen.insert(query_id.clone()) {
            return Err(Error::DuplicateId { index, id: query_id });
        }
        if corpus.get(&gold_doc_id).is_none() {
            return Err(Error::UnknownGold { index, gold: gold_doc_id });
        }
        queries.push(Query { query_id, text, gold_doc_id, gold_answer, subset });
    }
    Ok(QuerySet { queries })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub count: usize,
    pub mean_token_count: f64,
    pub per_subset: BTreeMap<Subset, usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut per_subset = BTreeMap::new();
    let mut total = 0usize;
    for doc in corpus.documents() {
        total += doc.token_count;
        *per_subset.entry(doc.subset).or_insert(0) += 1;
    }
    Ok(CorpusStats { count: corpus.len(), mean_token_count: total as f64 / corpus.len() as f64, per_subset })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Result list ordered by score descending, ties broken by ascending doc id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub source: String,
    entries: Vec<ScoredDoc>,
}

/// Total order used by every ranked list: score desc, then doc id asc.
pub fn rank_order(a_id: &str, a_score: f64, b_id: &str, b_score: f64) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

impl RankedList {
    pub fn empty(source: impl Into<String>) -> Self {
        Self { source: source.into(), entries: Vec::new() }
    }

    /// Sorts arbitrary (id, score) pairs into canonical order and keeps the
    /// first `k`. Scores must be finite and ids unique.
    pub fn from_scores(
        source: impl Into<String>,
        scores: impl IntoIterator<Item = (String, f64)>,
        k: usize,
    ) -> Result<Self> {
        let mut entries: Vec<ScoredDoc> =
            scores.into_iter().map(|(doc_id, score)| ScoredDoc { doc_id, score }).collect();
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !e.score.is_finite() {
                return Err(Error::InvalidRankedList(format!("non-finite score for `{}`", e.doc_id)));
            }
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::InvalidRankedList(format!("duplicate doc `{}`", e.doc_id)));
            }
        }
        let cmp = |a: &ScoredDoc, b: &ScoredDoc| rank_order(&a.doc_id, a.score, &b.doc_id, b.score);
        if k > 0 && k < entries.len() {
            entries.select_nth_unstable_by(k - 1, cmp);
        }
        entries.truncate(k);
        entries.sort_by(cmp);
        Ok(Self { source: source.into(), entries })
    }

    /// Accepts entries that are already in canonical order.
    pub fn from_sorted(source: impl Into<String>, entries: Vec<ScoredDoc>) -> Result<Self> {
        let list = Self { source: source.into(), entries };
        list.validate()?;
        Ok(list)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            if !e.score.is_finite() {
                return Err(Error::InvalidRankedList(format!("non-finite score at {i}")));
            }
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::InvalidRankedList(format!("duplicate doc `{}`", e.doc_id)));
            }
            if i > 0 {
                let p = &self.entries[i - 1];
                if rank_order(&p.doc_id, p.score, &e.doc_id, e.score) != Ordering::Less {
                    return Err(Error::InvalidRankedList(format!("out of order at {i}")));
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[ScoredDoc] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// 1-based rank of `doc_id`, if present.
    pub fn rank_of(&self, doc_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.doc_id == doc_id).map(|p| p + 1)
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}
