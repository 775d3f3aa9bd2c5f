use thiserror::Error;

/// Errors raised by the numerical layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A mathematical precondition on an input failed (t ≤ 0, y ≤ 0, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed argument combination (a ≥ b, n_steps = 0, off-grid time, ...).
    #[error("argument error: {0}")]
    Argument(String),
    /// Inconsistent solver, quadrature, or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A formula was requested outside the exponent regime it is stated for.
    #[error("regime error: {0}")]
    Regime(String),
    /// No claim exists for this input (e.g. odd exponent in the sign bounds).
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
