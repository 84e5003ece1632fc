use alloc::string::String;

/// Errors produced by the certification engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A noise specification violates its invariants.
    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),

    /// An iterative numerical routine did not converge.
    #[error("numeric failure in {context}: {diagnostics}")]
    NumericFailure {
        context: &'static str,
        diagnostics: String,
    },

    /// The probability constraints cannot be met by any base classifier.
    #[error("infeasible constraints: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(context: &'static str, diagnostics: impl Into<String>) -> Self {
        Error::NumericFailure {
            context,
            diagnostics: diagnostics.into(),
        }
    }

    /// True for errors that should map to a validation failure (bad input)
    /// rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::InvalidSpec(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;
