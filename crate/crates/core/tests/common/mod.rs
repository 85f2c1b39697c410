#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use ragbench_core::harness::{Engine, ExperimentConfig, Providers};
use ragbench_core::providers::{EmbeddingCache, ScriptedCompletion};
use ragbench_core::strategies::PromptLibrary;
use ragbench_core::{Corpus, Document, Query, QuerySet, Subset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYLLABLES: &[&str] = &[
    "zor", "vak", "quel", "thim", "brux", "pyl", "dran", "gosk", "wex", "nim", "tarp", "jol", "frim", "skel", "movr",
    "lunt", "crev", "haz", "obb", "yint", "plo", "drek", "snaf", "kib", "rulm", "tev", "wosp", "ghar", "blin", "cuz",
    "fep", "ivro", "naxt", "umph", "slee", "trog", "bav", "quom", "ylk", "dwi",
];

const FILLER: &[&str] = &[
    "company",
    "reported",
    "fiscal",
    "results",
    "segment",
    "operations",
    "during",
    "period",
    "compared",
    "prior",
    "balance",
    "sheet",
    "statement",
    "consolidated",
    "shares",
    "outstanding",
    "quarterly",
    "annual",
    "management",
    "discussion",
    "analysis",
    "review",
    "board",
    "committee",
    "approved",
    "policy",
];

const SUBSETS: [Subset; 3] = [Subset::FinQA, Subset::ConvFinQA, Subset::TATDQA];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    /// Only BM25 can find the gold: a unique code token is the one exact match.
    Lexical,
    /// Only dense retrieval can find the gold: every query token is a variant
    /// absent from the corpus vocabulary.
    Semantic,
}

pub struct Synthetic {
    pub corpus: Arc<Corpus>,
    pub queries: QuerySet,
    pub kinds: Vec<QueryKind>,
}

fn invent(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>, syllables: usize) -> String {
    loop {
        let w: String = (0..syllables).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        if used.insert(w.clone()) {
            return w;
        }
    }
}

fn filler(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| *FILLER.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

/// 200 documents and 50 queries split evenly into [`QueryKind::Lexical`] and
/// [`QueryKind::Semantic`]. Each lexical query has 6 distractors built from
/// variants of its content words, so an embedding of trigrams prefers them
/// over the gold document. The first number in every gold document is that
/// query's gold answer.
pub fn complementary_corpus(seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let mut docs = Vec::new();
    let mut queries = Vec::new();
    let mut kinds = Vec::new();

    for j in 0..25 {
        let subset = SUBSETS[j % 3];
        let code: String = loop {
            let c: String = (0..5).map(|_| *b"qxjzvkw".choose(&mut rng).expect("non-empty") as char).collect();
            if used.insert(c.clone()) {
                break c;
            }
        };
        let stems: Vec<String> = (0..3).map(|_| invent(&mut rng, &mut used, 3)).collect();
        let gold: f64 = f64::from(rng.gen_range(100..10_000)) / 10.0;
        let gold_id = format!("lg{j:02}");
        docs.push(Document::new(
            &gold_id,
            format!("Reported amount {gold} for {code}. {}", filler(&mut rng, 25)),
            subset,
        ));
        for m in 0..6 {
            let forms: Vec<String> =
                stems.iter().flat_map(|s| [format!("{s}ed"), format!("{s}er"), format!("{s}ed")]).collect();
            docs.push(Document::new(
                format!("ld{j:02}_{m}"),
                format!("Amount {}.5 {} {}", rng.gen_range(1..999), forms.join(" "), filler(&mut rng, 8)),
                subset,
            ));
        }
        let text = format!("{code} {}", stems.iter().map(|s| format!("{s}ing")).collect::<Vec<_>>().join(" "));
        queries.push(Query {
            query_id: format!("q{:03}", 2 * j),
            text,
            gold_doc_id: gold_id,
            gold_answer: gold,
            subset,
        });
        kinds.push(QueryKind::Lexical);
    }

    for j in 0..25 {
        let subset = SUBSETS[j % 3];
        let stems: Vec<String> = (0..3).map(|_| invent(&mut rng, &mut used, 3)).collect();
        let gold: f64 = f64::from(rng.gen_range(100..10_000)) / 10.0;
        let gold_id = format!("sg{j:02}");
        docs.push(Document::new(
            &gold_id,
            format!("Reported amount {gold} {} {} {}", stems.join(" "), filler(&mut rng, 6), stems.join(" ")),
            subset,
        ));
        let text = stems.iter().map(|s| format!("{s}s")).collect::<Vec<_>>().join(" ");
        queries.push(Query {
            query_id: format!("q{:03}", 2 * j + 1),
            text,
            gold_doc_id: gold_id,
            gold_answer: gold,
            subset,
        });
        kinds.push(QueryKind::Semantic);
    }

    let corpus = Corpus::from_documents(docs).expect("unique ids");
    let queries = QuerySet::new(queries, &corpus).expect("gold ids exist");
    Synthetic { corpus: Arc::new(corpus), queries, kinds }
}

/// Random finance-word documents; each query mixes four words of its gold
/// document with three random words, so gold ranks spread over the list.
pub fn noisy_corpus(n_docs: usize, n_queries: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let vocab: Vec<String> = (0..400).map(|_| invent(&mut rng, &mut used, 2)).collect();
    let docs: Vec<Document> = (0..n_docs)
        .map(|i| {
            let len = rng.gen_range(20..60);
            let words: Vec<&str> = (0..len).map(|_| vocab.choose(&mut rng).expect("non-empty").as_str()).collect();
            Document::new(format!("d{i:04}"), format!("Value {}.25 {}", i + 1, words.join(" ")), SUBSETS[i % 3])
        })
        .collect();
    let queries: Vec<Query> = (0..n_queries)
        .map(|qi| {
            let g = rng.gen_range(0..n_docs);
            let gold_words: Vec<&str> = docs[g].text.split_whitespace().skip(2).collect();
            let mut words: Vec<&str> = (0..4).map(|_| *gold_words.choose(&mut rng).expect("non-empty")).collect();
            words.extend((0..3).map(|_| vocab.choose(&mut rng).expect("non-empty").as_str()));
            Query {
                query_id: format!("n{qi:03}"),
                text: words.join(" "),
                gold_doc_id: docs[g].doc_id.clone(),
                gold_answer: (g + 1) as f64 + 0.25,
                subset: docs[g].subset,
            }
        })
        .collect();
    let corpus = Corpus::from_documents(docs).expect("unique ids");
    let queries = QuerySet::new(queries, &corpus).expect("gold ids exist");
    Synthetic { corpus: Arc::new(corpus), queries, kinds: Vec::new() }
}

pub fn small_cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.providers.embed_dimension = 256;
    cfg.bootstrap_samples = 2000;
    cfg
}

pub fn offline_engine(s: &Synthetic, cfg: &ExperimentConfig) -> Engine {
    let providers = Providers::offline(cfg, &s.queries);
    Engine::new(s.corpus.clone(), providers, Arc::new(EmbeddingCache::new()), Arc::new(PromptLibrary::default()))
}

/// Offline providers with the completion swapped for `llm` (metered into the
/// same ledger).
pub fn engine_with_llm(s: &Synthetic, cfg: &ExperimentConfig, llm: ScriptedCompletion) -> Engine {
    let mut providers = Providers::offline(cfg, &s.queries);
    providers.completion = Arc::new(ragbench_core::providers::Metered::new(llm, providers.ledger.clone()));
    Engine::new(s.corpus.clone(), providers, Arc::new(EmbeddingCache::new()), Arc::new(PromptLibrary::default()))
}

/// Every grade RELEVANT, HyDE passages and multi-query variants distinct
/// from the query text, summaries from the first words of the document.
pub fn accounting_llm() -> ScriptedCompletion {
    let question = regex::Regex::new(r"(?m)^(?:Original question|Question): (.*)$").unwrap();
    let q2 = question.clone();
    ScriptedCompletion::new("scripted")
        .rule(r"Classification:\s*$", "RELEVANT")
        .rule_fn(r"Passage:\s*$", move |p| {
            format!("{} reported figures", question.captures(p).map_or("", |c| c.get(1).unwrap().as_str()))
        })
        .rule_fn(r"Alternative queries:\s*$", move |p| {
            let q = q2.captures(p).map_or("", |c| c.get(1).unwrap().as_str());
            format!("1. {q} one\n2. {q} two\n3. {q} three")
        })
        .rule_fn(r"(?s)<document>\n(.*)\n</document>", |p| {
            let start = p.find("<document>\n").unwrap() + 11;
            p[start..].split_whitespace().take(8).collect::<Vec<_>>().join(" ")
        })
        .rule(r"Rewritten question:\s*$", "rewritten")
        .rule(r"Answer:\s*$", "UNANSWERABLE")
}
