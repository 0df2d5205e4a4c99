use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped so a caller (notably the CLI) can map them onto
/// stable exit-code categories: validation, crypto/key, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vector kind mismatch: {left} vs {right}")]
    KindMismatch { left: String, right: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("key generation failed: {0}")]
    KeyGeneration(String),

    #[error("public-key fingerprint mismatch: expected {expected}, got {actual}")]
    KeyMismatch { expected: String, actual: String },

    #[error("message out of range for this key: {0}")]
    MessageRange(String),

    #[error("ciphertext invalid: {0}")]
    CiphertextInvalid(String),

    #[error("not a template file: bad magic bytes")]
    BadMagic,

    #[error("unsupported file format version {0}")]
    BadVersion(u16),

    #[error("file is truncated or corrupt: {0}")]
    Truncated(String),

    #[error("record count mismatch: header declares {declared}, found {found}")]
    CountMismatch { declared: u32, found: usize },

    #[error("file content invalid: {0}")]
    FormatInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable exit-code category for CLI use:
    /// 2 = usage/validation, 3 = crypto/key, 4 = I/O and file formats.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::KindMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::EmptyInput(_)
            | Error::CalibrationFailed(_) => 2,
            Error::KeyGeneration(_)
            | Error::KeyMismatch { .. }
            | Error::MessageRange(_)
            | Error::CiphertextInvalid(_) => 3,
            Error::BadMagic
            | Error::BadVersion(_)
            | Error::Truncated(_)
            | Error::CountMismatch { .. }
            | Error::FormatInvalid(_)
            | Error::Io(_)
            | Error::Json(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
