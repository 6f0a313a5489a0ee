use std::path::Path;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// 2 for invalid input, 3 for runtime and numeric failures, 4 for I/O.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(4),
        }
    }
}

impl From<nelf_core::Error> for CliError {
    fn from(e: nelf_core::Error) -> Self {
        let msg = e.to_string();
        if e.is_validation() {
            CliError::Validation(msg)
        } else if e.is_io() {
            CliError::Io(msg)
        } else {
            CliError::Runtime(msg)
        }
    }
}
