use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} bits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("duplicate template for id `{0}`")]
    DuplicateTemplate(String),

    #[error("database is empty")]
    EmptyDatabase,

    #[error("template dimension must be positive")]
    ZeroDimension,

    #[error("cannot hold {count} distinct templates as a proper subset of a {dim}-bit space")]
    TooManyTemplates { count: usize, dim: usize },

    #[error("epsilon {epsilon} exceeds dimension {dim}")]
    EpsilonTooLarge { epsilon: usize, dim: usize },

    #[error("invalid cooling constant: {0}")]
    InvalidSchedule(String),

    #[error("flip-count vector is not feasible for the reduced system")]
    Infeasible,

    #[error("template `{0}` is not enrolled")]
    NotEnrolled(String),

    #[error("template `{0}` is already enrolled")]
    AlreadyEnrolled(String),

    #[error("leak contains no records")]
    EmptyLeak,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
