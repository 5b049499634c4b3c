use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error)]
pub enum LabError {
    /// An input lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The time integrator produced a non-positive density or a non-finite value.
    #[error("stability error at t = {time}, node {node}: {reason}")]
    Stability {
        time: f64,
        node: usize,
        reason: String,
    },

    /// The shift ODE left the computational domain or produced a non-finite value.
    #[error("shift error at t = {time}: {reason}")]
    Shift { time: f64, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}
