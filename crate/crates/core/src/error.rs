use alloc::string::String;

/// Errors raised anywhere in the design pipeline or the simulators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("system is not stable: {0}")]
    Stability(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("quadrature did not converge: {0}")]
    Tolerance(String),
    #[error("set is empty: {0}")]
    EmptySet(String),
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("linear program is unbounded")]
    LpUnbounded,
    #[error("admissible set not finitely determined within k_max = {k_max}; try a larger epsilon")]
    Determination { k_max: usize },
    #[error("infeasible design: {condition} ({remedy})")]
    Infeasible { condition: String, remedy: String },
    #[error("governor state left the admissible set (violation {violation:.3e})")]
    InvarianceLoss { violation: f64 },
    #[error("simulation diverged; last finite state at t = {last_good}")]
    Divergence { last_good: f64 },
    #[error("trace grids differ: {0}")]
    GridMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn dim_err(what: &str) -> Error {
    Error::Dimension(String::from(what))
}

pub(crate) fn infeasible(condition: impl Into<String>, remedy: impl Into<String>) -> Error {
    Error::Infeasible { condition: condition.into(), remedy: remedy.into() }
}
