use std::io;

use crate::element::ElementKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("segment {segment}: unknown place '{name}'")]
    UnknownPlace { segment: usize, name: String },

    #[error("channel {channel} sample {index}: {value} mV outside [0, {full_scale_mv}] mV")]
    SampleOutOfRange {
        channel: ElementKind,
        index: usize,
        value: f64,
        full_scale_mv: f64,
    },

    #[error("missing channel {0}")]
    MissingChannel(ElementKind),

    #[error("expected {expected} features, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
