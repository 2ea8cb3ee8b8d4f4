use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("gram matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("quadratic form is degenerate")]
    Degenerate,

    #[error("quadratic form is not indefinite: signature ({p}, {q})")]
    NotIndefinite { p: usize, q: usize },

    #[error("target value m must be nonzero")]
    ZeroTarget,

    #[error("operation requires d >= 3, got d = {0}")]
    DimensionTooSmall(usize),

    #[error("form or target is not integral")]
    NonIntegral,

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("candidate budget of {budget} evaluations exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("direction is not on the boundary: |Q(v)| = {q_value:e}")]
    NotOnBoundary { q_value: f64 },

    #[error("outside the validity domain: {0}")]
    OutsideDomain(String),

    #[error("quasi-conformality violated: observed ratio {observed} > constant {constant}")]
    QuasiConformalViolation { observed: f64, constant: f64 },

    #[error("matrix is not in O(Q): residual {residual:e}")]
    NotInGroup { residual: f64 },

    #[error("chart violation: residual {residual:e}")]
    ChartViolation { residual: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}
