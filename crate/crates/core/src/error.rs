use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid move: {0}")]
    IllegalMove(String),

    #[error("log-score undefined: {0}")]
    Domain(String),

    #[error("invalid classification: {0}")]
    InvalidClassification(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {side} token `{token}`")]
    UnknownToken { side: &'static str, token: String },

    #[error("event {index} (`{event}`) has probability {prob}")]
    ZeroProbability { index: usize, event: String, prob: f64 },

    #[error("empty partition: {0}")]
    EmptyPartition(&'static str),

    #[error("unknown baseline `{0}`")]
    UnknownBaseline(String),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
