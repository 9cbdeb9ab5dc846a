use thiserror::Error;

/// Errors raised by the simulator kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point (q = {q}, p = {p}) lies outside the unit disk")]
    OutOfDisk { q: f64, p: f64 },

    #[error("expectation vector has zero length, direction is undefined")]
    DegenerateDirection,

    #[error("closed-form effective Hamiltonian is only available for m = 0 (got m = {0})")]
    UnsupportedResonance(u32),

    #[error("integration accuracy: {what} = {value:.3e} exceeds {limit:.1e}; tighten rtol/atol")]
    IntegrationAccuracy {
        what: &'static str,
        value: f64,
        limit: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors that signal numerical trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::IntegrationAccuracy { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
