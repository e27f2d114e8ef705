use std::fmt;

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed or unreadable config/input files.
    Usage(String),
    /// Anything the numerical core rejects, surfaced verbatim.
    Numeric(mvapprox::Error),
    /// Writing results failed.
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Numeric(_) | Self::Output(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(msg) => write!(f, "usage error: {msg}"),
            Self::Numeric(e) => write!(f, "error: {e}"),
            Self::Output(msg) => write!(f, "output error: {msg}"),
        }
    }
}

impl From<mvapprox::Error> for CliError {
    fn from(e: mvapprox::Error) -> Self {
        Self::Numeric(e)
    }
}
