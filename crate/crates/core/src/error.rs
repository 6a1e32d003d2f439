use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is singular: pivot {pivot} has magnitude {magnitude:e}")]
    Singular { pivot: usize, magnitude: f64 },

    #[error("pole: argument {value} is within tolerance of a singularity")]
    Pole { value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("index {index} out of range for {len} solitons")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("capacity exceeded: {what} is {got}, the limit is {max}")]
    Capacity { what: &'static str, got: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid misalignment: {0}")]
    Grid(String),
}
