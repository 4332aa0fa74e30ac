use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("constraint {constraint:?} references undeclared variable #{var}")]
    UnknownVariable { constraint: String, var: usize },
    #[error("variable {0:?} has lower bound above upper bound")]
    InvertedBounds(String),
    #[error("integer variable {0:?} must have finite bounds")]
    UnboundedInteger(String),
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("LP parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solution file line {line}: unknown variable {name:?}")]
    UnknownSolutionVariable { line: usize, name: String },
}
