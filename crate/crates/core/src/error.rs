use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A value outside the mathematical domain of the operation (unstable AR
    /// filter, nonpositive variance or spectral density, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("segment geometry error: {msg} (hint: {hint})")]
    Geometry { msg: String, hint: String },

    #[error("segment out of range: {0}")]
    Boundary(String),

    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("particle weights collapsed at step {step}; try more particles (currently {n_particles})")]
    Collapse { step: usize, n_particles: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
