use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),

    #[error("infeasible: {segments} segments cannot be placed on {n} observations")]
    Infeasible { segments: usize, n: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("enumeration guard exceeded: {count} segmentations (limit {limit})")]
    EnumerationGuard { count: u128, limit: u128 },

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("degenerate rate: {0}")]
    DegenerateRate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by the data being numerically degenerate
    /// under the model, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateScale(_) | Error::DegenerateRate(_) | Error::Numerical(_)
        )
    }
}
