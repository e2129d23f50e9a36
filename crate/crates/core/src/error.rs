use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PGM: {0}")]
    MalformedPgm(String),

    #[error("truncated PGM raster: expected {expected} samples, found {found}")]
    TruncatedRaster { expected: usize, found: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal power is zero, SNR is undefined")]
    ZeroSignalPower,

    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },

    #[error("degenerate training data: {0}")]
    Degenerate(String),

    #[error("exhaustive enumeration bound exceeded: {0}")]
    EnumerationBound(String),

    #[error("invalid dictionary file: {0}")]
    DictionaryFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
