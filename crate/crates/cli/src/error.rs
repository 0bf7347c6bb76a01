use std::fmt;

/// CLI failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration (exit 1).
    Config(String),
    /// Missing, stale or malformed data or artifacts (exit 2).
    Data(String),
    /// Optimisation or floating-point failure (exit 3).
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<srr_core::Error> for CliError {
    fn from(e: srr_core::Error) -> Self {
        use srr_core::Error as E;
        match e {
            E::NonFinite(_) | E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
