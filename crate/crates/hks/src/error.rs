use std::fmt;

use hks_core::Error as CoreError;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input: exit code 2.
    Config(String),
    /// A solver failure during a run: exit code 3.
    Numerical(CoreError),
    /// Output could not be written: exit code 1.
    Io(std::io::Error),
}

impl CliError {
    /// A core error raised while validating user input.
    pub fn invalid(e: CoreError) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.category(), "message": self.to_string() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Numerical(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Errors that can only come from bad parameters are reported as config
/// errors; the rest are solver failures.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ResolutionTooSmall(_)
            | CoreError::NonPositiveLength(_)
            | CoreError::DiskRadius(_)
            | CoreError::InvalidParameter { .. }
            | CoreError::FieldLength { .. }
            | CoreError::BoundaryCase(_)
            | CoreError::NoViableSpecies
            | CoreError::OutsideHistory { .. }
            | CoreError::InvalidSeries(_) => CliError::Config(e.to_string()),
            CoreError::Sink(m) => CliError::Io(std::io::Error::other(m)),
            _ => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e.to_string()))
    }
}
