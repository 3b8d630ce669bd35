use alloc::string::String;
use core::fmt;

/// Errors raised by the estimation kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation that needs at least one value received none.
    EmptyInput,
    /// Block count incompatible with the number of rows, or an empty block.
    InvalidPartition { n: usize, k: usize },
    /// A scalar argument fell outside its domain (probability, direction, epsilon, ...).
    Domain(String),
    /// Shape or structural mismatch between arguments.
    Contract(String),
    /// Invalid estimator, direction or model configuration.
    Config(String),
    /// The bucketed means do not span enough of the space for the outlyingness to be finite.
    RankDeficient(String),
    /// The fixed-point inequality has no solution for the given budgets.
    Infeasible(String),
    /// The requested tail model has no closed form in this dimension.
    UnsupportedDimension { dim: usize, min: usize },
    /// Covariance or scale matrix is not symmetric positive definite.
    Model(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput => write!(f, "empty input"),
            Error::InvalidPartition { n, k } => {
                write!(f, "invalid partition: cannot split {n} rows into {k} non-empty blocks")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::RankDeficient(msg) => write!(f, "rank-deficient data: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::UnsupportedDimension { dim, min } => {
                write!(f, "unsupported dimension {dim}: the closed form requires d >= {min}")
            }
            Error::Model(msg) => write!(f, "model error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
