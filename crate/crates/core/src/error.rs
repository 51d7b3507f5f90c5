use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("not an isometry (max deviation of V†V from identity {0:e})")]
    NotIsometry(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("out of domain: {0}")]
    Domain(String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
