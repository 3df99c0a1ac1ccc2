use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A model reply could not be interpreted, even after the repair re-prompt.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("backend error: {message}")]
    Backend { message: String, retryable: bool },

    #[error("captioner failed at frame {frame_index}: {message}")]
    Caption { frame_index: u64, message: String },

    #[error("no precomputed caption for frame {frame_index}")]
    MissingCaption { frame_index: u64 },

    #[error("feature unavailable: {0}")]
    Unavailable(String),

    /// A scripted backend received a request its next entry does not match.
    #[error("script mismatch: {0}")]
    ScriptMismatch(String),

    #[error("plan error on line {line}: {message}")]
    Plan { line: usize, message: String },

    #[error("type error: {0}")]
    Type(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::Backend { retryable: true, .. } | Error::Caption { .. }
        )
    }

    /// True for failures caused by a model backend rather than by input data.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            Error::Protocol(_)
                | Error::Budget(_)
                | Error::Backend { .. }
                | Error::Caption { .. }
                | Error::Unavailable(_)
                | Error::ScriptMismatch(_)
        )
    }
}
