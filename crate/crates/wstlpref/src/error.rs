use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: malformed file: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] wstlpref_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("session is incomplete: {answered} of {total} pairs answered")]
    IncompleteSession { answered: usize, total: usize },
    #[error("files refer to different datasets: {0}")]
    Mismatch(String),
    #[error("cannot listen on {addr}: {message}")]
    Bind { addr: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<wstlpref_core::formula::ParseError> for Error {
    fn from(e: wstlpref_core::formula::ParseError) -> Self {
        Error::Core(e.into())
    }
}
