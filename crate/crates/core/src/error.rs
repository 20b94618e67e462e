use thiserror::Error;

/// Errors raised across the library.
///
/// Precision-related variants are never absorbed silently: a computation that
/// cannot certify its answer at the working precision fails with one of them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("mixed p-adic contexts: {left} vs {right}")]
    ContextMismatch { left: String, right: String },

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("rank ambiguous at precision {precision}: {detail}")]
    RankAmbiguous { precision: u32, detail: String },

    #[error("element is not regular: spectral valuations {0}")]
    NotRegular(String),

    #[error("invalid ray: {0}")]
    InvalidRay(String),

    #[error("matrix is not in SL_{n}: {field} has determinant {det}")]
    NotSpecialLinear { n: usize, field: String, det: String },

    #[error("node cap exceeded: {nodes} nodes > cap {cap}")]
    CapExceeded { nodes: usize, cap: usize },

    #[error("no sink control set")]
    NoSink,

    #[error("multiple sink control sets: {0:?}")]
    MultipleSinks(Vec<Vec<String>>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn exhausted(detail: impl Into<String>) -> Self {
        Error::PrecisionExhausted(detail.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
