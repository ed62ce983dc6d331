use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("duplicate session {session} for individual {individual}")]
    DuplicateSession { individual: String, session: u32 },
    #[error("non-monotone session index {session} for individual {individual}")]
    NonMonotoneSession { individual: String, session: u32 },
    #[error("arity mismatch for individual {individual} session {session}: expected {expected} values, found {found}")]
    ArityMismatch {
        individual: String,
        session: u32,
        expected: usize,
        found: usize,
    },
    #[error("duplicate individual id {0}")]
    DuplicateIndividual(String),
    #[error("empty partition: fraction {0} leaves one side without individuals")]
    EmptyPartition(f64),
    #[error("binary outcome mode requires targets in {{0, 1}}")]
    NonBinaryTarget,
    #[error("learner did not converge")]
    NotConverged,
    #[error("series too short: {length} sessions, {required} required")]
    SeriesTooShort { length: usize, required: usize },
    #[error("insufficient usable folds")]
    InsufficientFolds,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("undefined: {0}")]
    Undefined(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
