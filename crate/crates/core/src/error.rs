use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Observed variances violate the vacuum uncertainty product.
    #[error("observation unphysical: var_q * var_p = {product} is below 1/4 (var_q = {var_q}, var_p = {var_p})")]
    UncertaintyViolation {
        var_q: f64,
        var_p: f64,
        product: f64,
    },

    #[error("interior point infeasible: {0}")]
    Infeasible(&'static str),

    /// A bound with a `1/(1 - gamma)` prefactor was requested at `gamma -> 1`.
    #[error("bound diverges at gamma = {gamma}")]
    Divergent { gamma: f64 },

    #[error("quadrature did not converge: estimated error {abs_error:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence { abs_error: f64, subdivisions: usize },

    #[error(
        "insufficient data: cell (x = {x}, basis = {basis}) has {count} entries, need at least 2"
    )]
    InsufficientData { x: u8, basis: char, count: usize },

    #[error("Fock truncation too small: tail mass {tail:e} exceeds {limit:e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("degenerate top of spectrum: eigenvalues {top} and {second} are within {tol:e}")]
    DegenerateSpectrum { top: f64, second: f64, tol: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
