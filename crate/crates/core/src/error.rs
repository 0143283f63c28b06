use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A level would need more cell entries than the configured bound.
    #[error("level {level} needs {attempted} cell entries (limit {limit})")]
    Resource {
        level: usize,
        attempted: u128,
        limit: u128,
    },

    #[error("degenerate quadratic form: {0}")]
    DegenerateForm(String),

    #[error("no equal-weight harmonic structure: trace deviates from a multiple of E0 by {deviation:e}")]
    NoEqualWeightStructure { ratio: f64, deviation: f64 },

    #[error("harmonic structure is not regular: residual {residual:e}")]
    NotRegular { residual: f64 },

    #[error("broken harmonic structure: {0}")]
    BrokenStructure(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
