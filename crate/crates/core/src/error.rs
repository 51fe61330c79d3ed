use thiserror::Error;

use crate::node::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("field modulus {0} is not prime")]
    NotPrime(u64),
    #[error("field modulus {0} is out of range (need 2 < q < 2^63)")]
    ModulusOutOfRange(u64),
    #[error("polynomial degree must be at least {min}, got {got}")]
    InvalidDegree { got: usize, min: usize },
    #[error("coefficient matrix is not a symmetric (t+1)x(t+1) matrix over the field")]
    NotSymmetric,
    #[error("node id {0} maps to zero in the field")]
    ZeroId(u64),
    #[error("underdetermined: {have} shares cannot determine a degree-{degree} polynomial (need {need})")]
    Underdetermined { have: usize, need: usize, degree: usize },
    #[error("duplicate share owner {0}")]
    DuplicateOwner(u64),
    #[error("share of node {owner} has {got} coefficients, expected {expected}")]
    ShareDegreeMismatch { owner: u64, got: usize, expected: usize },
    #[error("shares are not consistent with a single symmetric polynomial")]
    InconsistentShares,
    #[error("ring size {requested} exceeds the {available} candidate peers in the pool")]
    RingTooLarge { requested: usize, available: usize },
    #[error("head ring size m'={m_prime} is smaller than sensor ring size m={m}")]
    HeadRingSmaller { m_prime: usize, m: usize },
    #[error("polynomial degree t={t} must exceed the group-head count {heads}")]
    DegreeTooSmall { t: usize, heads: usize },
    #[error("no master key registered for node {0}")]
    MissingMaster(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown group {0}")]
    UnknownGroup(usize),
    #[error("group {0} still has an active head")]
    HeadStillActive(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cannot capture {requested} nodes out of a population of {available}")]
    CaptureExceedsPopulation { requested: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
