use thiserror::Error;

use crate::grid::CellId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("grid dimensions must be at least 2 along every axis, got {nx}x{ny}x{nz}")]
    InvalidDims { nx: usize, ny: usize, nz: usize },

    #[error("cell coordinates {coords:?} lie outside the cell lattice {extents:?}")]
    InvalidCell {
        coords: [usize; 3],
        extents: [usize; 3],
    },

    #[error("cell id {0} is outside the cell lattice")]
    InvalidCellId(usize),

    #[error("expected {expected} scalar values, got {actual}")]
    ValueCount { expected: usize, actual: usize },

    #[error("scalar value at vertex {index} is not finite")]
    NonFinite { index: usize },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("cycle detected: {0}")]
    Cycle(String),

    #[error("unknown critical point {0}")]
    NotFound(u32),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("volume file {path} has {actual} bytes, expected {expected}")]
    FileSize {
        path: String,
        expected: u64,
        actual: u64,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn overflow_at(what: &str, row: CellId, col: CellId) -> Self {
        Error::Overflow(format!(
            "{what} overflowed 64 bits between cells {} and {}",
            row.0, col.0
        ))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
