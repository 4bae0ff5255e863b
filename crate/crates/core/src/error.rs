use thiserror::Error;

use crate::solver::NonConvergence;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    NotConverged(Box<NonConvergence>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Invalid(msg.into()))
}
