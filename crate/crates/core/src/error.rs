use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the half-plane or range where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("triplet kinds do not match: {0}")]
    MixedKinds(String),

    /// Adaptive quadrature exhausted its refinement budget.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:e}")]
    Quadrature {
        estimate: Complex64,
        error_bound: f64,
    },

    /// The integral diverges for the requested integrand and measure.
    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("fixed-point solve did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{missing} of {total} grid points could not be solved")]
    TooManyMissing { missing: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::Divergent(_)
                | Error::NoConvergence { .. }
                | Error::TooManyMissing { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
