use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {index} at ({x}, {y}) lies outside the {width}x{height} grid")]
    PointOutOfBounds {
        index: usize,
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("invalid grid size {width}x{height}")]
    EmptyGrid { width: usize, height: usize },

    #[error("expected {expected} values for the grid, got {actual}")]
    ValueCount { expected: usize, actual: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("{points} points but {boxes} boxes")]
    BoxCountMismatch { points: usize, boxes: usize },

    #[error("box {index} has non-positive extent ({w}, {h})")]
    InvalidBox { index: usize, w: f64, h: f64 },

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative distance {value} at index {index}")]
    NegativeDistance { index: usize, value: f64 },

    #[error("empty point set")]
    EmptyPointSet,

    #[error("ground truth has no boxes but the sigma policy needs them")]
    MissingBoxes,

    #[error("length mismatch: {predicted} predictions vs {truth} ground-truth values")]
    LengthMismatch { predicted: usize, truth: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("bad magic bytes {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported map file version {0}")]
    UnsupportedVersion(u32),

    #[error("unknown map kind {0}")]
    UnknownMapKind(u32),

    #[error("truncated map file: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("trailing bytes after map payload")]
    TrailingBytes,

    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("annotation document: {0}")]
    Schema(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
