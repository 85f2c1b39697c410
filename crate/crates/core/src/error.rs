use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record {index}: duplicate id `{id}`")]
    DuplicateId { index: usize, id: String },
    #[error("record {index}: malformed record: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("record {index}: empty text for `{id}`")]
    EmptyText { index: usize, id: String },
    #[error("record {index}: gold document `{gold}` not found in corpus")]
    UnknownGold { index: usize, gold: String },
    #[error("record {index}: gold answer `{raw}` is not a finite number")]
    NonNumericAnswer { index: usize, raw: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("k must be positive")]
    ZeroK,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector for `{0}` has a non-finite component")]
    NonFinite(String),
    #[error("vector for `{0}` has zero norm")]
    ZeroVector(String),
    #[error("fusion needs at least 2 ranked lists, got {0}")]
    TooFewLists(usize),
    #[error("invalid ranked list: {0}")]
    InvalidRankedList(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("giving up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("no scripted rule matches prompt starting with {0:?}")]
    UnmatchedPrompt(String),
    #[error("corpus is already contextualized")]
    AlreadyContextualized,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("query sets differ between `{0}` and `{1}`")]
    QuerySetMismatch(String, String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("run of `{method}` aborted after {completed} of {total} queries: {cause}")]
    RunAborted { method: String, completed: usize, total: usize, cause: String },
    #[error("bad cache file: {0}")]
    CacheFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
