use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix entries exceed {limit:e}; parameter range too large for double precision")]
    Overflow { limit: f64 },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("determinant {det} is not 1 (tolerance {tol:e})")]
    Determinant { det: f64, tol: f64 },
    #[error("parameter {name} = {value} outside supported range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("reduction did not terminate after {steps} steps (point too close to the real axis)")]
    ReductionDiverged { steps: usize },
    #[error("{excluded} of {total} evaluations were not finite")]
    TooManyExcluded { excluded: usize, total: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
