//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParam { field: String, message: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("linear algebra failure: {0}")]
    Lapack(String),

    #[error("degenerate steady state: {n_null} eigenvalues below tolerance {tol:.3e}")]
    DegenerateSteadyState { n_null: usize, tol: f64 },

    #[error("no steady state: smallest |eigenvalue| {smallest:.3e} above tolerance {tol:.3e}")]
    NoSteadyState { smallest: f64, tol: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no emission: g1(0) vanishes")]
    NoEmission,

    #[error("trace grid too coarse for the filter: dtau*kappa = {0:.3} > 0.5")]
    FilterGridTooCoarse(f64),

    #[error("correlation window not converged: |g_inc(tau_max)| = {resid:.3e} exceeds {tol:.3e}")]
    WindowNotConverged { resid: f64, tol: f64 },

    #[error("total emitted power is zero")]
    ZeroPower,

    #[error("convolution kernel too wide: fwhm = {fwhm:.4} exceeds span/4 = {max:.4}")]
    KernelTooWide { fwhm: f64, max: f64 },

    #[error("tail is not a plateau: relative drift {0:.3e} over the plateau window")]
    NoPlateau(f64),

    #[error("fit failed ({component}): {message}")]
    Fit { component: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub fn fit(component: &str, message: impl Into<String>) -> Self {
        ModelError::Fit {
            component: component.to_string(),
            message: message.into(),
        }
    }

    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        ModelError::InvalidParam {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
