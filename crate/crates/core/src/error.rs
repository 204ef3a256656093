use thiserror::Error;

/// Errors raised by the stirring engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("field has {got} values but the domain has {expected} degrees of freedom")]
    DofMismatch { expected: usize, got: usize },

    #[error("empty field")]
    EmptyField,

    #[error("incompatible Neumann problem: mean {mean:e} exceeds tolerance {tol:e}")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("degenerate triangle {index} (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigen iteration stagnated after {iterations} iterations (relative residual {residual:e})")]
    EigenStagnation { iterations: usize, residual: f64 },

    #[error("point ({x}, {y}) could not be located in the mesh")]
    PointLocation { x: f64, y: f64 },

    #[error("substep count {requested} exceeds the cap {cap} (max |u| = {max_speed:e})")]
    RunawayVelocity { requested: usize, cap: usize, max_speed: f64 },

    #[error("optimal flow stagnated at t = {t}: the projected forcing vanishes")]
    Stagnation { t: f64 },

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("expression error at position {pos}: {reason}")]
    Expression { pos: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical kernels (solvers, locators, runaway steps).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::EigenStagnation { .. }
            | Error::PointLocation { .. }
            | Error::RunawayVelocity { .. }
            | Error::Stagnation { .. }
            | Error::NonZeroMean { .. }
            | Error::DegenerateTriangle { .. } => true,
            Error::AtTime { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
