use std::fmt;

/// Failure classes with stable exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    /// Map a library error, naming the file line for row-level failures.
    pub fn from_core(e: simcorr::Error, line_of: impl Fn(usize) -> u64) -> Self {
        use simcorr::Error as E;
        match e {
            E::Degenerate { row: Some(t), locus } => {
                CliError::Data(format!("degenerate observation at data row {} (line {}): {locus}", t + 1, line_of(t)))
            }
            E::Numerical { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<simcorr::Error> for CliError {
    fn from(e: simcorr::Error) -> Self {
        CliError::from_core(e, |t| t as u64 + 1)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
