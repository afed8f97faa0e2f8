use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the formula it feeds.
    #[error("domain error: {0}")]
    Domain(String),

    /// Blue-detuned drive at or beyond the point where the total damping vanishes.
    #[error("self-oscillation: optical anti-damping {gamma_opt:.6e} rad/s >= mechanical damping {gamma_m:.6e} rad/s")]
    SelfOscillation { gamma_m: f64, gamma_opt: f64 },

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error at byte offset {offset}: {message}")]
    Data { offset: u64, message: String },

    /// A numerical procedure did not produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
