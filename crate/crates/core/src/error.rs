use thiserror::Error;

use crate::tree::Vertex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid tree shape: {0}")]
    InvalidShape(String),
    #[error("vertex {vertex} is not valid: {reason}")]
    InvalidVertex { vertex: Vertex, reason: String },
    #[error("vertices belong to different tree shapes")]
    ShapeMismatch,
    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undecided: closure cap exceeded ({0})")]
    Undecided(String),
    #[error("ball size cap of {0} words exceeded")]
    BallCapExceeded(usize),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("defining vector has length {found}, expected {expected}")]
    WrongVectorLength { expected: usize, found: usize },
    #[error("permutations live on different levels ({0} and {1})")]
    LevelMismatch(usize, usize),
    #[error("no rigid stabilizer witness found at vertex {vertex} within radius {radius}")]
    SearchFailed { vertex: Vertex, radius: usize },
    #[error("malformed descriptor: {0}")]
    MalformedDescriptor(String),
    #[error("descriptor has unknown fields; use the corollary classifier")]
    IncompleteDescriptor,
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("exponent prefix too short: need some exponent >= {required}")]
    PrefixTooShort { required: u32 },
    #[error("vertex list exhausted: certified only up to depth {certified}")]
    DepthExhausted { certified: usize },
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    /// Failures caused by caps, radii or exhausted search budgets rather than
    /// by malformed input or a failed proof obligation.
    pub fn is_computation_limit(&self) -> bool {
        matches!(
            self,
            Error::Undecided(_)
                | Error::BallCapExceeded(_)
                | Error::SearchFailed { .. }
                | Error::PrefixTooShort { .. }
                | Error::DepthExhausted { .. }
        )
    }
}
