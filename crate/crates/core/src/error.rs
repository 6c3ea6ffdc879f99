use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid selection matrix: {0}")]
    InvalidSelection(String),

    #[error("invalid stochastic matrix: {0}")]
    InvalidMatrix(String),

    #[error("diameter undefined: no arc joins two distinct nodes")]
    UndefinedDiameter,

    #[error("interaction graph is not weakly connected (second Laplacian eigenvalue is zero)")]
    Disconnected,

    #[error("selection matrix has no positive off-diagonal entry")]
    NoOffDiagonal,

    #[error("dyadic exponent {exponent} exceeds cap {cap}; rerun in float arithmetic")]
    DyadicOverflow { exponent: u64, cap: u32 },

    #[error("dependent communication needs equal success probabilities, got P+ = {plus}, P- = {minus}")]
    ModelMismatch { plus: f64, minus: f64 },

    #[error("invalid update matrix: {0}")]
    InvalidUpdate(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid bound constants: {0}")]
    InvalidConstants(String),

    #[error("invalid trial configuration: {0}")]
    InvalidConfig(String),

    #[error("target not reached within horizon; fraction still above level is {fraction}")]
    HorizonExceeded { fraction: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("graph satisfies double connectivity; no counterexample exists")]
    NoCounterexample,

    #[error("enumeration aborted: {distinct} distinct products exceed ceiling {ceiling}")]
    EnumerationCeiling { distinct: usize, ceiling: usize },
}
