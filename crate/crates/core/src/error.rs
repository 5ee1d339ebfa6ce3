use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("ordinal {ordinal} out of range [1, {count}]")]
    OrdinalOutOfRange { ordinal: u64, count: u64 },

    #[error("symbol {0} is not in the alphabet")]
    SymbolNotInAlphabet(u16),

    #[error("text is empty")]
    EmptyText,

    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,

    #[error("bit count overflows addressable memory")]
    Overflow,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("query {index} failed: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bad magic bytes, not an index file")]
    BadMagic,

    #[error("unsupported index version {0}")]
    UnsupportedVersion(u32),

    #[error("index file is truncated")]
    Truncated,

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
