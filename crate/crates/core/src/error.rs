use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("image too small: {0}")]
    Size(String),

    #[error("zero-norm matrix cannot be normalized")]
    ZeroNorm,

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("malformed raster{}: {reason}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Parse { reason: String, offset: Option<usize> },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(reason: impl Into<String>, offset: Option<usize>) -> Self {
        Error::Parse {
            reason: reason.into(),
            offset,
        }
    }

    /// True for failures caused by the filesystem or by unreadable file contents.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Parse { .. } | Error::Unsupported(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
