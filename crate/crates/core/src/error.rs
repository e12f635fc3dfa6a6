use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CbError {
    #[error("observation {value} outside support 0..={n}")]
    OutOfSupport { value: u32, n: u32 },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("zero probability for observation {index} (y = {value}) at p = {p}, rho = {rho}")]
    ZeroProbability {
        index: usize,
        value: u32,
        p: f64,
        rho: f64,
    },
    #[error("non-finite log-likelihood at iteration {iteration} (p = {p}, rho = {rho})")]
    NonFiniteLikelihood { iteration: usize, p: f64, rho: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("all {0} replications failed to fit")]
    AllReplicationsFailed(usize),
}

impl CbError {
    /// True for failures that come from the data/parameter combination
    /// rather than from a malformed request.
    pub fn is_fit_degeneracy(&self) -> bool {
        matches!(
            self,
            CbError::ZeroProbability { .. }
                | CbError::NonFiniteLikelihood { .. }
                | CbError::AllReplicationsFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CbError>;
