use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// `component` lists 1-based agent indices cut off from agent 1.
    #[error("graph is disconnected: agents {component:?} are unreachable from agent 1")]
    Disconnected { component: Vec<usize> },

    #[error("graph numerically disconnected: second eigenvalue {lambda2:e} <= tolerance {tol:e}")]
    NumericallyDisconnected { lambda2: f64, tol: f64 },

    #[error(
        "no connected random geometric graph after {attempts} draws (n = {n}, radius = {radius}); \
         try a larger radius"
    )]
    RetryCapExceeded { n: usize, radius: f64, attempts: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("problem failed validation: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "enumeration too large: {count} candidates exceed the guard of {guard}; \
         try switch_grid <= {suggested_grid}"
    )]
    EnumerationTooLarge {
        count: u128,
        guard: u128,
        suggested_grid: usize,
    },
}
