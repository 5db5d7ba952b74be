use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrogError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid use: {0}")]
    InvalidUse(String),

    #[error("degenerate circle system: {0}")]
    DegenerateSystem(String),

    #[error("underdetermined circle system: all offsets coincide")]
    Underdetermined,

    #[error("degenerate signal at coefficient {index}: {reason}")]
    DegenerateSignal { index: usize, reason: String },

    #[error("no valid equation triple for row {k} with r = {r}")]
    EquationSelection { k: usize, r: usize },

    #[error("ambiguous x3 branch: residuals {first:e} and {second:e} are not separated")]
    AmbiguousBranch { first: f64, second: f64 },

    #[error("{count} inequivalent spectra remain consistent with the trace")]
    AmbiguousRecovery { count: usize },

    #[error(
        "trace inconsistent with a bandlimited signal at step {step} (best residual {residual:e})"
    )]
    InconsistentTrace { step: usize, residual: f64 },

    #[error("invalid recovery settings: {0}")]
    InvalidSettings(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, FrogError>;
