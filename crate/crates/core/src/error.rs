use thiserror::Error;

/// Errors surfaced by the association, solver, and registration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("index {index} out of bounds for {what} of length {len}")]
    IndexOutOfBounds {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("rigid fit needs at least 3 point pairs, got {0}")]
    Underdetermined(usize),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("graph with {n} nodes exceeds the enumeration cap of {cap}")]
    GraphTooLarge { n: usize, cap: usize },

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
