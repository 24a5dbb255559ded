use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible regime: {0}")]
    InfeasibleRegime(String),

    #[error("rank deficiency: {0}")]
    Rank(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate denominator: 1 - alpha*a2 = {0} is not positive")]
    DegenerateDenominator(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("simulation trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
