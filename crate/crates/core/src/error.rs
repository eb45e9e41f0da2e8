use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty vocabulary: no word type survives min_count={min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} positives vs {right} negatives")]
    LengthMismatch { left: usize, right: usize },

    #[error("undefined cosine: zero vector")]
    ZeroVector,

    #[error("posterior undefined without context")]
    EmptyContext,

    #[error("no positive context words")]
    NoPositives,

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("no positive labels")]
    NoPositiveLabels,

    #[error("no positive gold weights")]
    NoPositiveGold,

    #[error("empty input")]
    EmptyInput,

    #[error("out of vocabulary: {0:?}")]
    OutOfVocabulary(String),

    #[error("all candidates out of vocabulary")]
    AllCandidatesOov,

    #[error("no usable pairs ({n_oov} out of vocabulary)")]
    NoUsablePairs { n_oov: usize },

    #[error("invalid word id {id} for vocabulary of size {size}")]
    InvalidWordId { id: usize, size: usize },

    #[error("vocabulary too large for exact enumeration ({size} > {limit}); use the training loss instead")]
    VocabTooLarge { size: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) => ErrorKind::Usage,
            Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn at_path(path: &std::path::Path, e: io::Error) -> Self {
        Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            message: message.into(),
        }
    }
}
