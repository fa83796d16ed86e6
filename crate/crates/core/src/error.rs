//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("encoding error: {0}")]
    Encode(String),

    #[error("decode error at index {index}: {msg}")]
    Decode { index: usize, msg: String },

    #[error("scheme mismatch: {0}")]
    Scheme(String),

    #[error("training error: {0}")]
    Train(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported version {found} (supported up to {supported})")]
    Version { found: u32, supported: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable class name; the CLI maps these to exit codes.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Integrity(_) => "integrity",
            Error::Range(_) => "range",
            Error::Config(_) => "config",
            Error::Encode(_) => "encode",
            Error::Decode { .. } => "decode",
            Error::Scheme(_) => "scheme",
            Error::Train(_) => "train",
            Error::Eval(_) => "eval",
            Error::Format(_) => "format",
            Error::Version { .. } => "version",
            Error::Io(_) => "io",
        }
    }
}
