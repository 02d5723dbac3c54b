use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),

    #[error("{what} budget exceeded: {requested} > {limit}")]
    BudgetExceeded { what: &'static str, requested: u64, limit: u64 },

    #[error("{metric}: routes disagree ({left} vs {right}, relative error {rel:.3e} > {tol:.1e})")]
    RouteDisagreement { metric: &'static str, left: f64, right: f64, rel: f64, tol: f64 },

    #[error("internal check failed: {0}")]
    InternalCheck(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("no checks ran")]
    NoChecks,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
