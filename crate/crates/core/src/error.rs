use thiserror::Error;

/// Errors raised by the numerical laboratory.
///
/// `Validation` covers contract violations detected before any numerics run;
/// the remaining variants report numerical failures with a diagnostic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),

    #[error("point lies on the chart equator (last coordinate {0:e})")]
    Equator(f64),

    #[error("convexity certificate failed: smallest eigenvalue {min_eig:e} at node {node}")]
    NotConvex { node: usize, min_eig: f64 },

    #[error("non-positive value {value:e} at node {node}")]
    NonPositive { node: usize, value: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("grid is not closed under the symmetry group (node {0} has no image)")]
    GridNotClosed(usize),

    #[error("no invariant harmonic subspace up to degree {0}")]
    NoInvariantSubspace(usize),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("construction error: {0}")]
    Construction(String),
}

impl Error {
    /// True when the error is a contract violation rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::UnsupportedDimension(_) | Error::Equator(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}
