use thiserror::Error;

/// Errors raised by the toolkit. Check failures (a certificate that does not
/// pass, a bound that is violated) are reported in result structs, not here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of {n} points cannot resolve {modes} modes (need at least {min})")]
    GridTooSmall { n: usize, modes: usize, min: usize },

    #[error("grid size {0} is not a power of two >= 2")]
    GridNotPowerOfTwo(usize),

    #[error("truncation mismatch: {0} vs {1}")]
    TruncationMismatch(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("elliptic modulus {0} outside [0, 1)")]
    ModulusOutOfRange(f64),

    #[error("degenerate roots: {0}")]
    DegenerateRoots(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("ODE stepper failed: {0}")]
    StepperFailure(String),

    #[error("integration became unstable: {0}")]
    Unstable(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("quadrature resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("operation not supported for model {0}")]
    UnsupportedModel(String),

    #[error("observable is not 1-Lipschitz in L2: {0}")]
    NotLipschitz(String),
}

pub type Result<T> = std::result::Result<T, Error>;
