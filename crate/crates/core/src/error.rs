use thiserror::Error;

/// Errors raised by the core numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polynomial is identically zero")]
    IdenticallyZero,
    #[error("root bisection did not converge on [{lo}, {hi}]")]
    RootNonConvergence { lo: f64, hi: f64 },
    #[error("dilation factor must be nonzero")]
    ZeroDilation,
    #[error("difference quotient needs distinct parameters, got {0} twice")]
    CoincidentNodes(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("evaluation point {0} lies outside the admissible domain")]
    DomainViolation(f64),
    #[error("duplicate node {0}")]
    DuplicateNodes(f64),
    #[error("nodes must be strictly increasing (at index {0})")]
    NonIncreasingNodes(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("quadrature budget exceeded")]
    QuadratureBudgetExceeded,
    #[error("too few nodes: need {needed}, got {got}")]
    TooFewNodes { needed: usize, got: usize },
    #[error("node {0} is not in the node set")]
    NodeNotFound(f64),
    #[error("expected a < b, got a = {a}, b = {b}")]
    OrderViolation { a: f64, b: f64 },
    #[error("bad subset: {0}")]
    BadSubset(String),
    #[error("order mismatch: expected at least {expected}, got {got}")]
    OrderMismatch { expected: usize, got: usize },
    #[error("degenerate gap [{a}, {b}]")]
    DegenerateGap { a: f64, b: f64 },
    #[error("synthesized curve has horizontality defect {defect:e} above tolerance {tol:e}")]
    SynthesisDefect { defect: f64, tol: f64 },
    #[error("invalid modulus of continuity: {0}")]
    InvalidModulus(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
