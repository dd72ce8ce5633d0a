use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not reach tolerance {eps:e} within {max_terms} terms")]
    CapExceeded { eps: f64, max_terms: usize },

    #[error("pole of the gamma function at {0}")]
    Pole(String),

    #[error("Mellin argument outside the strip of analyticity: Re(s) = {re} >= mu = {mu}")]
    Strip { re: f64, mu: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("adaptive quadrature did not converge: error estimate {err_estimate:e} after {intervals} intervals")]
    Quadrature { err_estimate: f64, intervals: usize },

    #[error("truncation horizon unreachable: decay rate {rate} is not negative")]
    UnreachableHorizon { rate: f64 },

    #[error("i/o error: {0}")]
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
