use thiserror::Error;

/// Errors raised by the retrodiction and smoothing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("not a density operator: {0}")]
    NotDensityOperator(String),

    #[error("dimension {dim} does not factor as {d_q} x {d_a}")]
    InvalidFactorization { dim: usize, d_q: usize, d_a: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid classical model: {0}")]
    InvalidModel(String),

    #[error("unknown outcome label {0:?}")]
    UnknownOutcome(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("measurement record has zero probability")]
    ZeroProbabilityRecord,

    #[error("instrument completeness defect {defect:e} exceeds tolerance")]
    IncompleteInstrument { defect: f64 },

    #[error("time step too coarse: {0}")]
    StepTooCoarse(String),

    #[error("enumeration of {count} records exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: usize },

    #[error("evidence has weight {leakage:e} outside the support of the predicted state")]
    EvidenceOutsideSupport { leakage: f64 },

    #[error("prior kind has no classical register")]
    MissingClassicalRegister,

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid extension: {0}")]
    InvalidExtension(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("scenario is not a classical limit: {0}")]
    NotClassicalLimit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
