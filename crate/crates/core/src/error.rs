use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{0} has no tokens")]
    EmptyBag(&'static str),
    #[error("vocabulary is empty after applying min_count = {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("corpus produced no (target, context) pairs for window {window}")]
    NoTrainingPairs { window: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("no token of the bag carries a nonzero weight")]
    AllTokensUnweighted,
    #[error("no token of the bag is in the vocabulary")]
    NoKnownTokens,
    #[error("cannot pool an empty list of embeddings")]
    EmptyPool,
    #[error("vector norm below 1e-12")]
    ZeroNorm,
    #[error("vector for `{id}` has zero norm")]
    ZeroNormEntry { id: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("batch of {size} pair(s) has no in-batch negative")]
    NoNegatives { size: usize },
    #[error("corpus needs at least 2 aligned pairs, got {0}")]
    CorpusTooSmall(usize),
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("ground-truth snippet has no tokens")]
    EmptyTruth,
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("benchmark is empty")]
    EmptyBenchmark,
    #[error("no pair is labeled relevant")]
    NoRelevantPairs,
    #[error("k must be at least 1")]
    ZeroK,
}
