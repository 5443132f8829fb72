use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("zero-probability event")]
    ZeroProbability,

    #[error("argument {0} is outside the domain x > 0")]
    Domain(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("character {glyph:?} at position {position} is not in the model alphabet")]
    OutsideAlphabet { position: usize, glyph: char },

    #[error("symbol {0} not kept")]
    SymbolNotKept(u32),

    #[error("symbol {0} has zero probability and cannot be part of a kept set")]
    ZeroProbabilityMember(u32),

    #[error("frequency table cannot hold {0} members (limit 65536)")]
    TooManyMembers(usize),

    #[error("exhaustive search refused: support of {0} symbols exceeds 20")]
    SupportTooLarge(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("reveal called without a pending guess")]
    NoPendingGuess,

    #[error("decoder lost synchronisation: {errors} errors but {skipped} skipped positions")]
    Desync { errors: usize, skipped: usize },

    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Failures while reading a serialized model.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("bad magic: expected \"RWC1\"")]
    BadMagic,

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u16),

    #[error("model data truncated")]
    Truncated,

    #[error("malformed model: {0}")]
    Malformed(String),
}
