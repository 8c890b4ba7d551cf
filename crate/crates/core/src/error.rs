use thiserror::Error;

/// Errors raised by the sampler, the targets and the diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite log-density {log_density} at the initial state of chain {chain}: {state}")]
    NonFiniteInitial {
        chain: usize,
        log_density: f64,
        state: String,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("degenerate particle weights at temperature step {step}")]
    DegenerateWeights { step: usize },

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
