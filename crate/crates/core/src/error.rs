use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("empty matrix: {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("payload length {found} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, found: usize },
    #[error("row count mismatch: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("single-class classification labels")]
    SingleClass,
    #[error("pseudo-label row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("token ids must be strictly ascending (position {0})")]
    UnsortedTokens(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("method undefined for regression")]
    UndefinedForRegression,
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("both token sets are empty")]
    EmptyTokenSets,
    #[error("need at least {needed} examples, found {found}")]
    TooFewExamples { needed: usize, found: usize },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("degenerate data: {0}")]
    Degenerate(&'static str),
    #[error("ranking is empty")]
    EmptyRanking,
    #[error("duplicate source id {0:?}")]
    DuplicateSource(String),
    #[error("no ground truth for source {0:?}")]
    MissingGroundTruth(String),
    #[error("regret undefined for non-positive best performance ({0})")]
    NonPositiveBest(f64),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("non-finite score for source {0:?}")]
    NonFiniteScore(String),
    #[error("no rows to aggregate")]
    EmptyReport,
}
