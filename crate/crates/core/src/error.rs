use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by loaders, models and the training loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("load error: {0}")]
    Load(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape error in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("state error: {0}")]
    State(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Shape {
            context,
            expected,
            found,
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::shape(context, expected, found))
    }
}
