use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter choice diverges: {0}")]
    Divergence(String),
    #[error("rank-deficient system: {0}")]
    RankDeficient(String),
    #[error("no convergence after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },
    #[error("no analytic oracle for {0}; use the Monte-Carlo method")]
    UnsupportedOracle(String),
    #[error("degenerate moment: {0}")]
    DegenerateMoment(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
    #[error("gamma budget over-allocated: {0}")]
    Budget(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Input(msg()))
    }
}
