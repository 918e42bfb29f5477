use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expansions live at different points")]
    PointMismatch,
    #[error("exact and approximate scalars cannot be mixed")]
    ModeMismatch,
    #[error("weight mismatch: expected {expected}, found {found}")]
    WeightMismatch { expected: i64, found: i64 },
    #[error("exponent {exponent} outside faithful window [{lead}, {trunc}]")]
    OutsideWindow { exponent: i64, lead: i64, trunc: i64 },
    #[error("window overflow: {0}")]
    WindowOverflow(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
