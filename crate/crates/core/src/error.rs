use std::io;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Each variant maps to a stable short code (see [`Error::code`]) so that
/// callers such as the command-line driver can distinguish validation
/// problems from runtime failures without string matching.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("layer {layer} has only zero weights, quantization scale is undefined")]
    DegenerateScale { layer: usize },

    #[error("layer index {index} out of range (network has {len} layers)")]
    LayerOutOfRange { index: usize, len: usize },

    #[error("key covers {key} bits but layer {layer} has {expected} weights")]
    KeyLength { layer: usize, key: usize, expected: usize },

    #[error("distance budget not reached: best individual has d = {achieved} > epsilon = {epsilon}")]
    BudgetNotReached { achieved: usize, epsilon: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("PE capacity exceeded: {0}")]
    Capacity(String),

    #[error("layer cannot be mapped onto the accelerator: {0}")]
    Unmappable(String),

    #[error("bad magic bytes {found:?}, expected {expected:?}")]
    BadMagic { found: [u8; 4], expected: [u8; 4] },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "E_DIMENSION",
            Error::Argument(_) => "E_ARGUMENT",
            Error::DegenerateScale { .. } => "E_DEGENERATE_SCALE",
            Error::LayerOutOfRange { .. } => "E_LAYER_RANGE",
            Error::KeyLength { .. } => "E_KEY_LENGTH",
            Error::BudgetNotReached { .. } => "E_BUDGET",
            Error::Domain(_) => "E_DOMAIN",
            Error::Capacity(_) => "E_CAPACITY",
            Error::Unmappable(_) => "E_UNMAPPABLE",
            Error::BadMagic { .. } => "E_MAGIC",
            Error::UnsupportedVersion { .. } => "E_VERSION",
            Error::Truncated(_) => "E_TRUNCATED",
            Error::Validation(_) => "E_VALIDATION",
            Error::Parse(_) => "E_PARSE",
            Error::Io(_) => "E_IO",
        }
    }

    /// True for errors caused by bad inputs (files, flags, preconditions)
    /// rather than by a failure while computing.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::BudgetNotReached { .. } | Error::Io(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_eof() {
            Error::Truncated(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}
