use std::path::PathBuf;

use thiserror::Error;

use crate::stochastics::Ar1Params;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("state is not on the grid: {0}")]
    OffGrid(String),

    #[error("AR(1) fit is not stationary (theta = {:.4})", .params.theta)]
    NonStationary { params: Ar1Params },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("malformed input {path}: {reason}")]
    Input { path: PathBuf, reason: String },

    #[error("table file is corrupt or incompatible: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
