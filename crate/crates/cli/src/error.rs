use std::fmt;

/// Failure of a subcommand, carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments (exit 1).
    Usage(String),
    /// Anything raised by the library (exit 2 for I/O and parsing,
    /// 3 otherwise).
    Core(cpca::Error),
    /// A domain condition detected by the CLI itself (exit 3).
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_io() => 2,
            CliError::Core(_) | CliError::Domain(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<cpca::Error> for CliError {
    fn from(e: cpca::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Wraps a filesystem error with its path (exit 2).
pub fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Core(cpca::Error::io(path, e))
}
