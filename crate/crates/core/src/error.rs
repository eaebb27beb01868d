use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distribution has an empty support")]
    EmptySupport,

    #[error("support has {support} values but {probs} probabilities were given")]
    LengthMismatch { support: usize, probs: usize },

    #[error("support value {0} is not finite")]
    NonFiniteSupport(f64),

    #[error("probability {0} is negative or not finite")]
    InvalidProbability(f64),

    #[error("probabilities sum to {sum}, expected 1 within {tolerance:e}")]
    ProbabilitySum { sum: f64, tolerance: f64 },

    #[error("distribution {index}: {source}")]
    Distribution {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("a product space needs at least one coordinate")]
    NoCoordinates,

    #[error("joint outcome count {count} exceeds the cap of {cap}")]
    OutcomeOverflow { count: u128, cap: u128 },

    #[error("exact engine supports at most {max} coordinates, got {n}")]
    TooManyCoordinates { n: usize, max: usize },

    #[error("coordinate {index} is out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("coordinate {0} appears more than once")]
    DuplicateIndex(usize),

    #[error("index set must be nonempty")]
    EmptyIndexSet,

    #[error("order k = {k} is out of range 1..={n}")]
    OrderOutOfRange { k: usize, n: usize },

    #[error("bracket depth p = {p} is out of range 1..={max}")]
    DepthOutOfRange { p: usize, max: usize },

    #[error("invalid statistic: {0}")]
    InvalidStatistic(String),

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("coordinates must be identically distributed; coordinate {0} differs from coordinate 0")]
    NotIdenticallyDistributed(usize),

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidMcConfig(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    /// True for failures that indicate a numerical or logic defect rather than bad input.
    pub fn is_consistency(&self) -> bool {
        match self {
            Error::Consistency(_) => true,
            Error::Distribution { source, .. } => source.is_consistency(),
            _ => false,
        }
    }
}
