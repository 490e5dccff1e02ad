use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("mean-mode singularity: negative exponent {exponent} applied to a field with nonzero mean")]
    MeanModeSingularity { exponent: f64 },

    #[error("invalid interpolant: {0}")]
    InvalidInterpolant(String),

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("blow-up detected at t = {t}: non-finite coefficient")]
    BlowUp { t: f64 },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
