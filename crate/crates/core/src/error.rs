use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("Hurst exponent {0} does not exhibit long-range dependence (H > 1/2 required)")]
    LongMemoryRequired(f64),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("covariance factorization failed in the {stage} stage: {detail}")]
    Factorization { stage: &'static str, detail: String },

    #[error("non-finite value at step {step}, path {path}")]
    NonFinite { step: usize, path: usize },

    #[error("corrector field {field} has non-finite entries ({masked} nodes masked)")]
    NonFiniteField { field: &'static str, masked: usize },

    #[error("tridiagonal solve broke down at time level {level}")]
    SolverBreakdown { level: usize },

    #[error("evaluation point (t = {t}, z = {z}) lies outside the grid")]
    OutOfGrid { t: f64, z: f64 },

    #[error("unknown preset '{name}'; valid presets are {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_domain(
    ok: bool,
    name: &'static str,
    value: f64,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
