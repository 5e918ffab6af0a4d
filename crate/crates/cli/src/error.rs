use std::fmt;

/// Command failure, mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable/malformed inputs (exit 2).
    Input(String),
    /// Training diverged (exit 3).
    Divergence(String),
    /// A bench cell ended with no successful trial (exit 4).
    BenchFailure(String),
    /// Anything else, e.g. an output directory that cannot be written (exit 1).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::BenchFailure(_) => 4,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Divergence(m) => write!(f, "divergence: {m}"),
            CliError::BenchFailure(m) => write!(f, "bench failure: {m}"),
            CliError::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<plr_core::Error> for CliError {
    fn from(e: plr_core::Error) -> Self {
        use plr_core::Error as E;
        match e {
            E::Divergence { .. } | E::Selection { .. } => CliError::Divergence(e.to_string()),
            E::Io(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
