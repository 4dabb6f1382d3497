use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} outside the supported range [2, 65536)")]
    ModulusOutOfRange(u64),
    #[error("value {value} is not reduced modulo {modulus}")]
    Unreduced { value: u64, modulus: u32 },
    #[error("attempted to invert zero")]
    ZeroInverse,
    #[error("singular linear system")]
    Singular,
    #[error("inconsistent linear system")]
    Inconsistent,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("evaluation points are not pairwise distinct")]
    DuplicatePoints,
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid repair job: {0}")]
    InvalidJob(String),
    #[error("columns do not lie on a codeword: check t={t}, plane {plane}, index {index} evaluates to {value}")]
    InconsistentCodeword {
        t: usize,
        plane: usize,
        index: usize,
        value: u32,
    },
    #[error("{missing} columns missing but at most {max} erasures are correctable")]
    TooManyErasures { missing: usize, max: usize },
    #[error("{got} columns supplied, {need} required")]
    NotEnoughColumns { got: usize, need: usize },
    #[error("node {0} supplied more than once")]
    DuplicateNode(usize),
    #[error("repair protocol violation: {0}")]
    Protocol(String),
    #[error("malformed transcript at line {line}: {reason}")]
    MalformedTranscript { line: usize, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
