use std::fmt;
use std::path::Path;

/// Failures surfaced by the command line, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration or input data. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// A solver did not converge. Exit code 2.
    #[error("{0}")]
    Numeric(String),
    /// A file could not be read or written. Exit code 1.
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn validation(msg: impl fmt::Display) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 2,
            _ => 1,
        }
    }

    /// Machine-readable tag printed as `error[<tag>]: ...`.
    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numeric(_) => "numeric",
            CliError::Io { .. } => "io",
        }
    }
}

impl From<dsrs_core::Error> for CliError {
    fn from(e: dsrs_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_and_tags() {
        let numeric: CliError =
            dsrs_core::Error::NumericFailure { context: "dual", diagnostics: "no bracket".into() }.into();
        assert_eq!((numeric.exit_code(), numeric.tag()), (2, "numeric"));
        let invalid: CliError = dsrs_core::Error::InvalidSpec("2k < d".into()).into();
        assert_eq!((invalid.exit_code(), invalid.tag()), (1, "validation"));
        let io = CliError::io(Path::new("x"), std::io::Error::other("gone"));
        assert_eq!((io.exit_code(), io.tag()), (1, "io"));
    }
}
