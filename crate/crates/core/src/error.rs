use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdidError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} of size {size} exceeds the enumeration cap {limit}")]
    Capacity { what: &'static str, size: usize, limit: usize },
    #[error("unsupported query family for this method: {0}")]
    UnsupportedFamily(String),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("solver hit its time limit")]
    TimeLimit,
    #[error("MILP objective {milp} disagrees with evaluated value {eval}")]
    Consistency { milp: f64, eval: f64 },
}

pub type Result<T> = std::result::Result<T, DdidError>;
