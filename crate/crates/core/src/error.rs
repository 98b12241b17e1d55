use std::path::PathBuf;

/// Error type shared by the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input file (sequence index, frame, scenario, config, log).
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Caller violated a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Interaction lifecycle misuse (double open, close of non-open).
    #[error("invalid state: {0}")]
    State(String),

    /// Degenerate geometry (e.g. head at or below camera height).
    #[error("geometry error: {0}")]
    Geometry(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
