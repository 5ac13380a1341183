use thiserror::Error;

/// Errors produced by the model, the solver, the simulator and the sweep layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("backoff stage {stage} outside 0..={max_stage}")]
    StageRange { stage: usize, max_stage: usize },

    #[error("{what} outside [0,1]: {value}")]
    ProbabilityDomain { what: &'static str, value: f64 },

    #[error("infeasible phase for UP{priority}: lock denominator {denominator} <= 0 (phase shorter than one transmission)")]
    InfeasiblePhase { priority: usize, denominator: f64 },

    #[error("degenerate denominator for UP{priority}: tau = 1")]
    DegenerateTau { priority: usize },

    #[error("channel permanently blocked for UP{priority}: p_idle = 0")]
    BlockedChannel { priority: usize },

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("solution is not converged")]
    StaleState,

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("comparison error: {0}")]
    Compare(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
