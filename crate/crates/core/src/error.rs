use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("singular design: condition estimate {condition:.3e} exceeds {limit:.0e}")]
    SingularDesign { condition: f64, limit: f64 },

    #[error("degenerate PDC column {column} at {freq} Hz (zero column norm)")]
    DegenerateColumn { column: usize, freq: f64 },

    #[error("band {band} has an empty frequency grid")]
    EmptyGrid { band: String },

    #[error("numeric fault in layer {layer}: {message}")]
    Numeric { layer: usize, message: String },

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
