use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ballot is empty")]
    EmptyBallot,
    #[error("an election needs at least one candidate")]
    NoCandidates,
    #[error("candidate {candidate} appears more than once")]
    DuplicateCandidate { candidate: usize },
    #[error("candidate index {index} out of range for {m} candidates")]
    CandidateOutOfRange { index: usize, m: usize },
    #[error("rankings have different candidate counts ({left} vs {right})")]
    MismatchedCandidates { left: usize, right: usize },
    #[error("invalid tiers: {0}")]
    InvalidTiers(String),
    #[error("expected a partial ballot, got a ranking with interior ties")]
    NotPartial,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what}: estimated {estimate} operations exceeds the budget of {cap}")]
    BudgetExceeded { what: String, estimate: u128, cap: u128 },
    #[error("ballot is not a node of this graph")]
    UnknownNode,
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("clusterings describe different profiles")]
    MismatchedClusterings,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
