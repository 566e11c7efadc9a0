use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    /// Bad magic, unknown version or an impossible header.
    #[error("format error: {0}")]
    Format(String),

    /// The payload ended before the header said it would.
    #[error("corrupt file: {0}")]
    Corruption(String),

    /// Non-finite or out-of-range values.
    #[error("invalid data: {0}")]
    Data(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A caller broke a documented precondition (e.g. non-unit embedding).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Zero bandwidth, zero variance, collapsed head norm and similar.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::Stream(_) => "io",
            Error::Format(_) => "format",
            Error::Corruption(_) => "corruption",
            Error::Data(_) => "data",
            Error::Parse { .. } => "parse",
            Error::Shape(_) => "shape",
            Error::Contract(_) => "contract",
            Error::Degenerate(_) => "degenerate",
            Error::Training(_) => "training",
            Error::Image(_) => "image",
        }
    }
}
