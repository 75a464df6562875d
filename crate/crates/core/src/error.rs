use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("triple ({0}, {1}, {2}) is not unimodular modulo {3}")]
    NonUnimodular(i64, i64, i64, u64),
    #[error("invalid level {0}")]
    InvalidLevel(u64),
    #[error("no admissible reducing vector for symbol with determinant {0}")]
    ReductionStall(String),
    #[error("coset enumeration exceeded the budget of {0} cosets")]
    BudgetExceeded(usize),
    #[error("probe set does not determine Hecke coordinates: {0}")]
    ProbeRankDeficient(String),
    #[error("no anchor eigenvalue with a one-dimensional eigenspace: {0}")]
    AnchorNotFound(String),
    #[error("insufficient 2-adic precision: {0}")]
    InsufficientPrecision(String),
    #[error("alpha coset meets nilpotent elements: {0}")]
    NilpotentRisk(String),
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
    #[error("singular matrix")]
    Singular,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
