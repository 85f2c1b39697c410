//! Experiment orchestration: configuration, running methods over a query
//! set, reports, significance tables, generation, sweeps and failure analysis.

mod compare;
mod config;
mod engine;
mod failures;
mod generate;
pub mod output;
mod report;
mod run;
mod sweep;

pub use compare::{compare_methods, SignificanceRow};
pub use config::{ExperimentConfig, Method, Paths, ProviderBindings};
pub use engine::{retrieve_with, Engine, Providers};
pub use failures::{
    categorization_prompt, categorize_all, categorize_failure, sample_failures, FailureCase, FailureCategory,
    CATEGORIZE_PROMPT, FAILURE_DEPTH,
};
pub use generate::{
    answer_questions, build_context, format_gold, summarize_generation, GenerationRecord, GenerationSummary,
};
pub use report::{MethodResult, QueryRecord, RunReport, SubsetSummary, REPORT_FORMAT_VERSION};
pub use run::{run_experiment, run_methods};
pub use sweep::{sweep, SweepAxis, SweepPoint, SweepResult, SweepRow};
