use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("field shape mismatch: {0}")]
    Shape(String),

    #[error("unknown initial-data preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid parameter `{key}`: {reason}")]
    Parameter { key: String, reason: String },

    #[error("state value {value} outside [0,1] at {location}")]
    OutOfRange { value: f64, location: String },

    #[error(
        "elliptic solve did not converge: residual {residual:e} after {iterations} iterations"
    )]
    EllipticNonConvergence { iterations: usize, residual: f64 },

    #[error("time step {dt:e} violates the stability bound {limit:e} ({kind})")]
    Cfl {
        dt: f64,
        limit: f64,
        kind: &'static str,
    },

    #[error("kinetic field is not nonincreasing in xi at cell {cell}, bin {bin}")]
    NotMonotone { cell: usize, bin: usize },

    #[error("bound violation {violation:e} at t = {t}")]
    BoundViolation { t: f64, violation: f64 },

    #[error("entropy residual {residual:e} exceeds {limit:e} for k = {k} at t = {t}")]
    EntropyGate {
        t: f64,
        k: f64,
        residual: f64,
        limit: f64,
    },

    #[error("box size does not divide extent: {0}")]
    BoxSize(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
