use std::path::PathBuf;

use crate::grid::CellIndex;

/// Errors raised by map handling, planning inputs and file IO.
///
/// Planner infeasibility is not an error: it is reported through
/// [`PlanResult::feasible`](crate::planner::PlanResult) with empty waypoints.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("radio map contains no cells")]
    EmptyMap,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{endpoint} cell ({}, {}) is not traversable", .cell.col, .cell.row)]
    NotTraversable { endpoint: &'static str, cell: CellIndex },

    #[error("{endpoint} cell ({}, {}) lies outside the focus mask", .cell.col, .cell.row)]
    OutsideMask { endpoint: &'static str, cell: CellIndex },

    #[error("world point ({x}, {y}) lies outside the grid")]
    OutOfGrid { x: f64, y: f64 },

    #[error("mask version {found} is not supported (expected {expected})")]
    MaskVersion { found: u32, expected: u32 },

    #[error("unknown algorithm style: {0}")]
    UnknownStyle(String),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
