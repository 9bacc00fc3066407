use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("box is not a sub-box of the global box (dimension {dim})")]
    NotASubBox { dim: usize },

    #[error("resolution must be positive")]
    ZeroResolution,

    #[error("covered cell count overflows")]
    CellCountOverflow,

    #[error("grid has {cells} cells, exceeding the enumeration limit of {limit}")]
    TooManyCells { cells: f64, limit: u64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("k = {k} exceeds the {distinct} distinct points available")]
    KTooLarge { k: usize, distinct: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cache was populated for a different point set or configuration")]
    CacheMismatch,

    #[error("no monitor for class {0}")]
    UnknownClass(usize),

    #[error("malformed monitor file at {location}: {message}")]
    MalformedMonitorFile { location: String, message: String },

    #[error("feature file row {row}: {message}")]
    FeatureParse { row: u64, message: String },

    #[error("τ list is empty")]
    EmptyTauList,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) | Error::CellCountOverflow => 3,
            _ => 2,
        }
    }
}
