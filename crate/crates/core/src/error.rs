use thiserror::Error;

/// Errors produced while reading or validating an LVRT threshold file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("file too short: {len} bytes, need at least {need}")]
    Truncated { len: usize, need: usize },
    #[error("bad magic {found:02x?}, expected \"LVRT\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("max_p {max_p} does not match payload length {len}")]
    Length { max_p: u64, len: usize },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("stored threshold {theta} at p = {p} is inconsistent with the table")]
    Inconsistent { p: u64, theta: u32 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {0} exceeds the element bound 2^62")]
    Bound(u64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("element {p} needs a dense table beyond the configured limit {limit}")]
    Capacity { p: u64, limit: u64 },
    #[error("threshold store covers p <= {have}, need {need}")]
    InsufficientStore { have: u64, need: u64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("structural error: {0}")]
    Structure(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
