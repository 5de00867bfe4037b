use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("archive has no occupied cells")]
    EmptyArchive,
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    /// Configuration problem; `line` is 1-based when the offending key could be located.
    #[error("{}", match .line { Some(l) => format!("config line {l}: {message}"), None => format!("config: {message}") })]
    Config { line: Option<usize>, message: String },
    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
