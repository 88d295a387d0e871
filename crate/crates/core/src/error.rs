use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the Gamma function at {0}")]
    Pole(f64),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("degenerate index: {0}")]
    DegenerateIndex(String),
    #[error("operation undefined for theta = 1")]
    Regime,
    #[error("scan ceiling reached with {found} of {wanted} roots")]
    BracketExhaustion { found: usize, wanted: usize },
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error("state blew up at step {step}")]
    NumericalBlowup { step: u64 },
    #[error("curve grids differ")]
    GridMismatch,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
