use std::path::PathBuf;

use thiserror::Error;

use crate::world::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map parse error at line {line}: {reason}")]
    MapParse { line: usize, reason: String },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("no path from {start} to {goal}")]
    NoPath { start: Cell, goal: Cell },

    #[error("cell {0} is not free")]
    CellNotFree(Cell),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid rule base: {0}")]
    RuleBase(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid yaw trace at line {line}: {reason}")]
    YawTrace { line: usize, reason: String },

    #[error("decision log: {0}")]
    DecisionLog(String),

    #[error("report: {0}")]
    Report(String),

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Socket(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
