use std::fmt;

use holstein_core::Error as CoreError;

/// Errors surfaced by the command line, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Config { line: Option<usize>, msg: String },
    Infeasible(String),
    Numerical(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config {
            line: None,
            msg: msg.into(),
        }
    }

    pub fn at(line: usize, msg: impl Into<String>) -> Self {
        Self::Config {
            line: Some(line),
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Infeasible(_) => 3,
            Self::Numerical(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config { line: Some(l), msg } => write!(f, "config error at line {l}: {msg}"),
            Self::Config { line: None, msg } => write!(f, "config error: {msg}"),
            Self::Infeasible(m) => write!(f, "infeasible: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(m) | CoreError::DimensionMismatch(m) => Self::config(m),
            CoreError::Infeasible(m) => Self::Infeasible(m),
            e @ (CoreError::NonUniqueSteadyState { .. } | CoreError::Numerical(_)) => {
                Self::Numerical(e.to_string())
            }
        }
    }
}

/// Short status tag for a failed sweep point.
pub fn status_of(e: &CoreError) -> &'static str {
    match e {
        CoreError::InvalidArgument(_) | CoreError::DimensionMismatch(_) => "invalid",
        CoreError::Infeasible(_) => "infeasible",
        CoreError::NonUniqueSteadyState { .. } => "non-unique",
        CoreError::Numerical(_) => "numerical",
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
