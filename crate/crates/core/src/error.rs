use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown token {token:?} at position {pos}")]
    UnknownToken { pos: usize, token: char },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("integer overflow while evaluating `{0}`")]
    Overflow(String),

    #[error("empty domain")]
    EmptyDomain,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid entropy order: {0}")]
    InvalidOrder(String),

    #[error("invalid gain function: {0}")]
    InvalidGain(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("variable `{0}` of the function is not assigned to any party group")]
    UnassignedVariable(String),

    #[error("variable `{0}` appears in more than one party group")]
    DuplicateVariable(String),

    #[error("the order-1 entropy requires a unitary gain function")]
    NonUnitaryGain,

    #[error("enumeration of {requested} input combinations exceeds the cap of {cap}")]
    DomainTooLarge { requested: u128, cap: u128 },

    #[error("invalid approximation: {0}")]
    InvalidApproximation(String),

    #[error("invalid optimisation problem: {0}")]
    InvalidProblem(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
