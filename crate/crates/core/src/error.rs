use alloc::string::String;

/// Errors produced by the sampling, orthonormalization and solver routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate family: {0}")]
    DegenerateFamily(String),
    #[error("basis cannot be evaluated at x = {x}: {reason}")]
    Evaluation { x: f64, reason: String },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("x = {0} carries mass under D but not under D'")]
    UnsupportedPoint(f64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid basis specification: {0}")]
    InvalidBasis(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Gram matrix is singular (smallest eigenvalue {0:e})")]
    SingularGram(f64),
    #[error("design is not good: Gram spectrum [{min:.4}, {max:.4}] outside [0.75, 1.25]")]
    NotGood { min: f64, max: f64 },
    #[error("condition number K_D' is infinite: D' misses a point with positive mass and leverage")]
    InfiniteConditionNumber,
    #[error("barrier violated at round {round}: {detail}")]
    BarrierViolation { round: usize, detail: String },
    #[error("BSS loop exceeded {0} rounds")]
    RoundLimitExceeded(usize),
    #[error("no good execution after {0} attempts")]
    NoGoodExecution(usize),
    #[error("label count mismatch: expected {expected}, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("invalid sparsity k = {0}")]
    InvalidK(usize),
    #[error("frequency net has {candidates} candidate tuples, above the cap of {cap}")]
    NetTooLarge { candidates: u128, cap: u128 },
}

pub type Result<T> = core::result::Result<T, Error>;
