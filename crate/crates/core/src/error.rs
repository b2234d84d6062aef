use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("broken path for OD {od}: {reason}")]
    BrokenPath { od: usize, reason: String },
    #[error("asset `{asset}` lies outside the weather grid")]
    OutOfDomain { asset: String },
    #[error("cannot remove {requested} edges from a network with {available}")]
    TooManyRemovals { requested: usize, available: usize },
    #[error("total demand is zero")]
    DegenerateDemand,
    #[error("simulation did not recover within {0} days")]
    HorizonExceeded(usize),
    #[error("invalid cluster count k={k} for {n} days")]
    InvalidK { k: usize, n: usize },
    #[error("histogram bin widths differ ({0} vs {1})")]
    BinMismatch(f64, f64),
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
