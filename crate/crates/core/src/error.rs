use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("ball B(z, {radius:.3e}) is not contained in the annular region: {detail}")]
    Containment { radius: f64, detail: String },

    #[error("depth {depth} exceeds maximum depth {h_max}")]
    Depth { depth: u32, h_max: u32 },

    #[error("refinement stalled: {0}")]
    Stall(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("failed to construct instance: {0}")]
    Synthesis(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
