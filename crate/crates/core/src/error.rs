use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("message {message_id}: field `{field}` is empty")]
    EmptyField { message_id: u64, field: &'static str },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate reply in pool at id {0}")]
    DuplicateReply(usize),
    #[error("lm bias for reply {0} must be finite and <= 0")]
    InvalidBias(usize),
    #[error("length mismatch: {what} has {actual} entries, expected {expected}")]
    LengthMismatch { what: &'static str, expected: usize, actual: usize },
    #[error("encoder dimension {0} must be a power of two and at least 64")]
    InvalidDim(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("bad magic")]
    BadMagic,
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("truncated matrix: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("matrix size mismatch: header declares {expected} bytes of payload, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shortlist holds {available} candidates but {requested} were requested")]
    ShortlistTooSmall { available: usize, requested: usize },
    #[error("reply id {0} appears twice in the shortlist")]
    DuplicateCandidate(usize),
    #[error("reply id {0} is out of range")]
    ReplyOutOfRange(usize),
    #[error("{n_topics} topics requested for {rows} replies")]
    TooManyTopics { n_topics: usize, rows: usize },
    #[error("rouge order {0} is not supported")]
    UnsupportedOrder(usize),
    #[error("no references given")]
    NoReferences,
    #[error("reply set is empty")]
    EmptySet,
    #[error("self-rouge needs at least two replies, got {0}")]
    SetTooSmall(usize),
    #[error("message {0} has no prediction")]
    MissingPrediction(u64),
    #[error("message {0} is predicted more than once")]
    DuplicatePrediction(u64),
    #[error("prediction for unknown message {0}")]
    UnknownPrediction(u64),
}
