use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid subsystem layout: {0}")]
    Layout(String),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("operator is not an orthogonal projector (max deviation {0:.3e})")]
    NotProjector(f64),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("non-finite entry encountered")]
    NonFinite,
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("invalid circuit: {0}")]
    Circuit(String),
    #[error("QASM parse error on line {line}: {msg}")]
    Qasm { line: usize, msg: String },
    #[error("invalid shot data: {0}")]
    Shots(String),
}
