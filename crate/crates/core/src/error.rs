use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("derivative order {order} exceeds the smoothness of the mollifier (max {max})")]
    OrderTooHigh { order: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resolution contract violated: dx = {dx:.3e} exceeds the limit {limit:.3e}")]
    Resolution { dx: f64, limit: f64 },

    #[error("CFL violation: cfl = {cfl} exceeds the stable limit {limit}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("stencil out of domain at x = {x}")]
    StencilOutOfDomain { x: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that arise while computing, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Cfl { .. } | Error::Numerical(_) | Error::StencilOutOfDomain { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
