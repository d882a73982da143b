use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("down-step probability at index {index} is {value}, expected a value in (0, 1)")]
    InvalidProbability { index: i64, value: String },

    #[error("per-step discount {0} is outside (0, 1]")]
    InvalidDiscount(String),

    #[error("state {0} cannot reach an absorbing state")]
    NonAbsorbingChain(usize),

    #[error("linear system is singular at pivot {0}")]
    SingularSystem(usize),

    #[error("the conditioned chain is undefined at zero black balls")]
    UndefinedAtZero,

    #[error("value overflows the f64 range")]
    Overflow,

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("total of {total} balls exceeds the exact-path limit of {limit}")]
    StateSpaceTooLarge { total: u64, limit: u64 },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}
