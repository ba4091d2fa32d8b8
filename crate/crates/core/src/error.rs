use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The value of F at a duration lies on (or cannot be separated from) a
    /// dyadic cell boundary.
    #[error("boundary ambiguous: {0}")]
    BoundaryAmbiguous(String),

    #[error("rate/duration mismatch: rate {rate} with duration {duration}")]
    RateDurationMismatch { rate: String, duration: String },

    #[error("state {0} is terminal")]
    TerminalState(String),

    #[error("successors of state {0} cannot be enumerated")]
    NotEnumerable(String),

    #[error("specification {0} has measure zero")]
    ZeroMeasure(String),

    #[error("state sequence is not admissible")]
    NotAdmissible,

    #[error("node budget of {0} exceeded")]
    BudgetExceeded(usize),

    #[error("trajectory too short: needs {needed} positions, has {available}")]
    TrajectoryTooShort { needed: usize, available: usize },

    #[error("schedule is not a refinement chain at step {0}")]
    NotAChain(usize),

    #[error("set is not an antichain: {0} and {1} overlap")]
    NotAntichain(String, String),

    #[error("compression failed: {0}")]
    Compression(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
