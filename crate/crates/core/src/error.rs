use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument z = {z} exceeds the series cap {cap}")]
    ArgumentCap { z: f64, cap: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no sign change for {context}; scan trace has {} points", trace.len())]
    NoSignChange {
        context: String,
        trace: Vec<(f64, f64)>,
    },

    #[error("singular denominator at {0}")]
    SingularDenominator(String),

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
