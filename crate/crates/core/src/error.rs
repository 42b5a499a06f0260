use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quantization: bit depth {0} outside 1..=16")]
    InvalidBitDepth(u32),

    #[error("symbol {symbol} at position {position} is outside the alphabet of {alphabet_size} symbols")]
    SymbolOutOfAlphabet {
        position: u64,
        symbol: u64,
        alphabet_size: usize,
    },

    #[error("quantization mismatch: {left} bit vs {right} bit")]
    SpecMismatch { left: u32, right: u32 },

    #[error("empty source: no samples to build a model from")]
    EmptySource,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("entropy {entropy} bits exceeds word size {word_bits} bits")]
    InfeasibleWordSize { entropy: f64, word_bits: f64 },

    #[error("alphabet of {alphabet_size} symbols is too large for {what}")]
    AlphabetTooLarge { alphabet_size: usize, what: &'static str },

    #[error("stream ended after {got} bytes, inside a {expected}-byte header")]
    TruncatedHeader { expected: u64, got: u64 },

    #[error("read error at byte offset {offset}: {source}")]
    Read {
        offset: u64,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("container format error: {0}")]
    Format(String),

    #[error("container corrupted: {stage}")]
    Corrupt { stage: &'static str },

    #[error("container truncated: {0}")]
    Truncated(&'static str),

    #[error("coefficient of determination undefined: observations have zero variance")]
    UndefinedRSquared,

    #[error("bench configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
