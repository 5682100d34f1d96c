use std::fmt;
use std::process::ExitCode;

/// Failure classes of the command-line driver, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters (exit 2).
    Usage(String),
    /// Input files that fail to parse or validate (exit 3).
    Input(String),
    /// A conjecture scan produced candidates that survived reverification
    /// (exit 4).
    Candidate(usize),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Input(_) => ExitCode::from(3),
            CliError::Candidate(_) => ExitCode::from(4),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Candidate(n) => write!(f, "{n} counterexample candidate(s) survived reverification"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cqoverlap::Error> for CliError {
    fn from(e: cqoverlap::Error) -> Self {
        use cqoverlap::Error::*;
        match e {
            Arity(_) | Config(_) | Witness(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}
