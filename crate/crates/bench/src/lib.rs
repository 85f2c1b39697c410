//! Seeded synthetic inputs shared by the criterion benchmarks.

use ragbench_core::{Corpus, Document, RankedList, Subset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "revenue",
    "net",
    "income",
    "operating",
    "expenses",
    "cash",
    "flow",
    "assets",
    "liabilities",
    "equity",
    "dividend",
    "share",
    "margin",
    "segment",
    "lease",
    "pension",
    "goodwill",
    "impairment",
    "tax",
    "rate",
    "interest",
    "debt",
    "inventory",
    "depreciation",
    "amortization",
    "capital",
    "expenditure",
    "total",
    "fiscal",
    "quarter",
    "year",
    "increase",
    "decrease",
    "percent",
    "million",
    "billion",
    "table",
    "note",
];

/// `n` documents of 60-200 tokens mixing finance words, years and amounts.
pub fn synthetic_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n)
        .map(|i| {
            let len = rng.gen_range(60..200);
            let text: Vec<String> = (0..len)
                .map(|_| match rng.gen_range(0..10) {
                    0 => rng.gen_range(2005..2024).to_string(),
                    1 => format!("{:.1}", rng.gen_range(0.0..5000.0)),
                    _ => WORDS.choose(&mut rng).expect("non-empty").to_string(),
                })
                .collect();
            Document::new(format!("doc{i:06}"), text.join(" "), Subset::FinQA)
        })
        .collect();
    Corpus::from_documents(docs).expect("synthetic ids are unique")
}

/// Short keyword queries drawn from the same vocabulary.
pub fn synthetic_queries(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(3..8);
            (0..len).map(|_| *WORDS.choose(&mut rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

pub fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<(String, Vec<f32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| (format!("doc{i:06}"), (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())).collect()
}

/// A random ranked list of `len` ids drawn from a universe of `universe`.
pub fn random_list(len: usize, universe: usize, seed: u64) -> RankedList {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..universe).collect();
    ids.shuffle(&mut rng);
    RankedList::from_scores("random", ids.into_iter().take(len).map(|i| (format!("doc{i:06}"), rng.gen::<f64>())), len)
        .expect("finite scores")
}

pub fn random_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}
