use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The potential violates a structural requirement (monotonicity, integrability, ...).
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    /// Tail asymptotics are undefined because the derivative vanishes.
    #[error("singular derivative: phi'({x}) = 0")]
    SingularDerivative { x: f64 },

    /// The measure is not symmetric log-concave, so the half-line formula is not its profile.
    #[error("profile refused: {0}")]
    NotLogConcave(String),

    /// A grid or window request is inconsistent with the measure.
    #[error("invalid grid: {0}")]
    Grid(String),

    /// A rate or beta function failed its monotonicity certificate.
    #[error("certificate failed: {0}")]
    Certificate(String),

    /// Something that should be impossible on a connected grid happened.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
