use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced while building spline spaces, evaluating the sieve
/// likelihood, or running the fit/simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate interval: a={a} must be strictly less than b={b}")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("knot placement produced duplicate interior knots")]
    DuplicateKnots,
    #[error("quantile knot placement requires a nonempty residual sample")]
    EmptyResiduals,
    #[error("evaluation point t={t} outside basis domain [{a}, {b}]")]
    OutOfDomain { t: f64, a: f64, b: f64 },
    #[error("derivative order {requested} unsupported for spline order {order}")]
    UnsupportedDerivative { requested: usize, order: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unsupported Gauss-Legendre point count {0} (must be in 1..=64)")]
    UnsupportedQuadPoints(usize),
    #[error("integrand returned a non-finite value at t={t}")]
    IntegrationFailure { t: f64 },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error(
        "residual {residual} of observation {index} left the extended domain [{lo}, {hi}]"
    )]
    DomainViolation {
        index: usize,
        residual: f64,
        lo: f64,
        hi: f64,
    },
    #[error("log-likelihood is non-finite at the starting value")]
    NonFiniteStart,
    #[error("empty risk set at t={t}")]
    EmptyRiskSet { t: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("censoring calibration could not bracket target rate {target}")]
    CensoringBracketing { target: f64 },
    #[error("simulation aborted: {failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },
    #[error("fit did not converge: gradient norm {grad_norm:.3e} after {iters} iterations")]
    NonConvergence { grad_norm: f64, iters: usize },
}
