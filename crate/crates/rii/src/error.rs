use thiserror::Error;

/// Errors produced by index construction, search, and persistence.
#[derive(Debug, Error)]
pub enum RiiError {
    /// A caller-supplied argument violated a precondition (dimension
    /// mismatch, out-of-range identifier, invalid parameter combination).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Codebook or rotation training could not run on the given data.
    #[error("training error: {0}")]
    Training(String),

    /// A serialized index or vector file is malformed. `section` names the
    /// part of the file that failed to parse.
    #[error("format error in {section}: {detail}")]
    Format {
        section: &'static str,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RiiError>;

impl RiiError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        RiiError::InvalidInput(msg.into())
    }

    pub(crate) fn format(section: &'static str, detail: impl Into<String>) -> Self {
        RiiError::Format {
            section,
            detail: detail.into(),
        }
    }
}
