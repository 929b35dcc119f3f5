use thiserror::Error;

/// Errors produced by the analytical model and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible capacity: cache holds {capacity} objects but only {effective} objects receive requests")]
    InfeasibleCapacity { capacity: u64, effective: u64 },

    #[error("characteristic time solver failed after {iterations} iterations, bracket [{lo}, {hi}]")]
    SolverFailure { lo: f64, hi: f64, iterations: usize },

    #[error("tree analysis did not converge after {iterations} iterations (last delta {delta:e})")]
    NonConvergence { iterations: usize, delta: f64 },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
