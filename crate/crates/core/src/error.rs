use thiserror::Error;

/// Errors shared by all solver and utility routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("threshold must be nonnegative")]
    NegativeThreshold,

    #[error("radius must be nonnegative")]
    NegativeRadius,

    #[error("weight at index {0} is negative")]
    NegativeWeight(usize),

    #[error("division by zero")]
    DivisionByZero,

    #[error("exact square root does not exist for {0}")]
    IrrationalResult(String),

    #[error("singular linear system")]
    SingularSystem,

    #[error("minimizer path is not unique: singular restricted system on support {support:?}")]
    NonUniquePath { support: Vec<usize> },

    #[error("unpenalized starting point is not unique: singular normal equations on zero-weight indices {indices:?}")]
    SingularUnpenalizedStart { indices: Vec<usize> },

    #[error("no admissible subset resolves the tie among candidates {candidates:?}")]
    TieResolutionFailed { candidates: Vec<usize> },

    #[error("lambda {0} lies outside the path range")]
    LambdaOutOfRange(String),

    #[error("stopping target cannot be reached: {0}")]
    InfeasibleStop(String),

    #[error("step size undefined: K r = 0 while r != 0")]
    SingularStepSize,

    #[error("iteration produced non-finite values")]
    Diverged,

    #[error("numsteps must be at least 1")]
    ZeroNumSteps,

    #[error("invalid stopping rule: {0}")]
    InvalidStoppingRule(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
