use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("slit violation: |ybar| = {0:e}")]
    Slit(f64),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not orthogonal (max |O^T O - I| = {0:e})")]
    NotOrthogonal(f64),
    #[error("insufficient interior margin for finite differences: {0}")]
    Margin(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("quadrature did not converge on [{a}, {b}] (recursion depth exhausted)")]
    Quadrature { a: f64, b: f64 },
    #[error("constraint violation: {0}")]
    Constraint(String),
    #[error("condition `{condition}` violated at {node}: value {value:e}")]
    Condition {
        condition: String,
        node: String,
        value: f64,
    },
    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
