//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use thiserror::Error;

use crate::raster::Rect;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image: {0}")]
    CorruptImage(String),

    #[error("rect {rect:?} out of bounds for a {width}x{height} image")]
    OutOfBounds { rect: Rect, width: u32, height: u32 },

    #[error("rows {top}..={bottom} contain no ink")]
    EmptyBand { top: u32, bottom: u32 },

    #[error("no text line has a word gap, page thresholds are undefined")]
    NoTextLine,

    #[error("{name} must lie strictly between {lo} and {hi}, got {value}")]
    AlphaOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("nothing to aggregate: no evaluated pages")]
    EmptyCorpus,

    #[error("page spec needs {needed} rows of content but only {available} fit")]
    SpecOverflow { needed: u32, available: u32 },

    #[error("missing ground truth for page {0:?}")]
    MissingTruth(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid page spec: {0}")]
    InvalidSpec(String),

    #[error("malformed json in {path}: {msg}")]
    MalformedJson { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
