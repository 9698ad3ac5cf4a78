use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A produced state broke a structural invariant. Never expected at
    /// runtime; surfaces bugs in the dynamics.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("state space has {count} states, exceeding the cap of {cap}")]
    StateSpaceTooLarge { count: usize, cap: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("policy induces a multichain structure: {0}")]
    Multichain(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
