use std::fmt;
use std::io;
use std::path::Path;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit status 1.
    Usage(String),
    /// Unreadable or invalid input data: exit status 2.
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, err: io::Error) -> CliError {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    pub fn data(path: &Path, err: impl fmt::Display) -> CliError {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}
