use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what}: argument {value} outside the admissible domain")]
    Domain { what: &'static str, value: f64 },

    #[error("sampled nonlinearity evaluated at {t}, outside the knot range (last knot {last})")]
    OutOfRange { t: f64, last: f64 },

    #[error("invalid nonlinearity: {0}")]
    InvalidPsi(String),

    #[error("no closed form for {0}")]
    UnsupportedFamily(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operator not uniformly elliptic at node {node}: smallest eigenvalue {min_eigenvalue}")]
    NotElliptic { node: usize, min_eigenvalue: f64 },

    #[error("M-matrix property violated at node {node} {coords:?}: {reason}")]
    NotMMatrix {
        node: usize,
        coords: Vec<f64>,
        reason: String,
    },

    #[error("grids are not compatible: {0}")]
    GridMismatch(String),

    #[error("linear solver failed: {0}")]
    LinearSolve(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("input is not a discrete supersolution: residual {residual:e} at node {node}")]
    NotSupersolution { node: usize, residual: f64 },
}
