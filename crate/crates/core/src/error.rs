use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the stroke pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stroke {stroke}: non-finite {field}")]
    NonFinite { stroke: usize, field: &'static str },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty image")]
    EmptyImage,

    #[error("region {0} has no pixels")]
    EmptyRegion(usize),

    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("unsupported element <{0}>")]
    UnsupportedElement(String),

    #[error("unsupported command '{command}' at byte {offset}")]
    UnsupportedCommand { command: char, offset: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedImage(String),

    #[error("path data parse error at byte {offset}: {message}")]
    PathSyntax { offset: usize, message: String },

    #[error("svg: {0}")]
    Svg(String),

    #[error("unsupported stroke file version {0}, expected 1")]
    Version(u64),

    #[error("invalid stroke file: {0}")]
    Schema(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("png decode: {0}")]
    PngDecode(#[from] png::DecodingError),

    #[error("png encode: {0}")]
    PngEncode(#[from] png::EncodingError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for inputs in a format this crate deliberately does not read
    /// (foreign SVG constructs, non 8-bit PNGs).
    pub fn is_unsupported_format(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedElement(_)
                | Error::UnsupportedCommand { .. }
                | Error::UnsupportedImage(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
