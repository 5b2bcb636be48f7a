use thiserror::Error;

pub type Result<T, E = ColError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ColError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid decision set: {0}")]
    InvalidSet(String),

    #[error("point lies outside the decision set (violation {violation:e})")]
    OutsideSet { violation: f64 },

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error(
        "entropy geometry requires strictly positive coordinates (coordinate {index} is {value:e})"
    )]
    EntropyDomain { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "inner solver did not converge within {iterations} iterations (last residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("no certified equilibrium route: {0}")]
    NoCertifiedRoute(String),

    #[error("grid evaluation unsupported for intrinsic dimension {dim} (limit 3)")]
    GridUnsupported { dim: usize },

    #[error("missing certificate: {0}")]
    MissingCertificate(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown suite `{name}`; available suites: {available}")]
    UnknownSuite { name: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
