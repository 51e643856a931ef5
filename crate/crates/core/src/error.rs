use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}, expected 2 or 3")]
    InvalidDimension(usize),
    #[error("refinement level must be at least 1, got {0}")]
    InvalidLevel(usize),
    #[error("element {0} has zero volume")]
    DegenerateElement(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular to working precision (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("non-positive entry {value} at index {index} of {what}")]
    NonPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("unsupported quadrature order {0}, expected 1, 2 or 4")]
    QuadratureOrder(usize),
    #[error("preconditioner is not positive definite ((r, C^-1 r) = {0})")]
    IndefinitePreconditioner(f64),
    #[error("non-positive curvature (p, Ap) = {0} in conjugate gradients")]
    NonPositiveCurvature(f64),
    #[error("power iteration did not converge within {0} steps")]
    PowerIteration(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix market parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
