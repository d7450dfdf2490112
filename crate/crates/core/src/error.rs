use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid exponent p = {0}; need p >= 1")]
    InvalidExponent(f64),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("|alpha| and |beta| have the same parity")]
    Parity,

    #[error("a plan needs at least one term")]
    EmptyPlan,

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("enumeration of {count} lattice points exceeds the cap of {cap}")]
    TooLarge { count: BigInt, cap: u64 },

    #[error("Q_S vanishes at {0}")]
    SingularPoint(String),

    #[error("no candidate rho <= 2^{max_exponent} passed")]
    SearchExhausted { max_exponent: u32 },

    #[error("sign patterns {first:?} and {second:?} collide{}", if *.first_coordinate_only { " in the first coordinate" } else { "" })]
    Collision {
        first: Vec<i8>,
        second: Vec<i8>,
        first_coordinate_only: bool,
    },

    #[error("ratio undefined: {0}")]
    UndefinedRatio(&'static str),

    #[error("the smoothness does not have Property (O)")]
    NoWitness,

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// True for failures that are statements about the input mathematics
    /// rather than malformed input or bugs.
    pub fn is_domain_failure(&self) -> bool {
        match self {
            Error::NoWitness
            | Error::Collision { .. }
            | Error::SearchExhausted { .. }
            | Error::SingularPoint(_)
            | Error::TooLarge { .. }
            | Error::UndefinedRatio(_) => true,
            Error::Stage { source, .. } => source.is_domain_failure(),
            _ => false,
        }
    }
}
