//! Retrieval strategies, metrics and a benchmark harness for question
//! answering over financial documents that mix text and tables.
//!
//! The crate is organised bottom-up: [`corpus`] holds the shared data types,
//! [`lexical`] and [`vector`] are the two first-stage indexes, [`fusion`]
//! combines their lists, [`providers`] wraps the external embedding,
//! completion and rerank services, [`strategies`] composes all of that into
//! retrievers, [`eval`] scores them and [`harness`] runs experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod harness;
pub mod lexical;
pub mod providers;
pub mod strategies;
pub mod vector;

pub use corpus::{load_corpus, load_queries, Corpus, Document, Query, QuerySet, RankedList, ScoredDoc, Subset};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, Method, RunReport};
pub use lexical::{Bm25Params, LexicalIndex};
pub use strategies::{Retriever, StrategyConfig};
pub use vector::VectorIndex;
