//! Locates tables on scanned single-column document pages.
//!
//! The pipeline works purely on ink/blank structure: a page is adaptively
//! binarized, border noise is removed, the ink is slightly dilated, and the
//! horizontal projection profile is cut into text-line bands. Word-space and
//! line-height thresholds derived from the page's own "standard" text line
//! then classify each line, and runs of table-ish lines are merged into
//! rectangular regions.
//!
//! Detected regions fall into three categories:
//!
//! * `A`: fully ruled tables that bind into one tall zero-gap band,
//! * `B`: tables with horizontal rule lines above/below their rows,
//! * `C`: tables marked only by aligned columns of white space.

pub mod config;
pub mod detector;
pub mod error;
pub mod evaluator;
pub mod pnm;
pub mod preprocess;
pub mod profile;
pub mod raster;
pub mod synth;
pub mod thresholds;

pub use config::RunConfig;
pub use detector::{detect, DetectionReport, DetectorConfig, LineClass, TableRegion};
pub use error::{Error, Result};
pub use evaluator::{EvalSummary, GroundTruth};
pub use preprocess::PreprocessConfig;
pub use profile::{ProfileConfig, TextLine};
pub use raster::{BinaryImage, GrayImage, Rect};
pub use thresholds::PageThresholds;

use serde::{Deserialize, Serialize};

/// Table category assigned to a detected or ground-truth region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::A, Category::B, Category::C];

    /// Gray level used when burning this category's border into an overlay.
    pub fn overlay_level(self) -> u8 {
        match self {
            Category::A => 0,
            Category::B => 64,
            Category::C => 128,
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Category::A => f.write_str("A"),
            Category::B => f.write_str("B"),
            Category::C => f.write_str("C"),
        }
    }
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Category::A),
            "B" | "b" => Ok(Category::B),
            "C" | "c" => Ok(Category::C),
            other => Err(Error::InvalidConfig(format!(
                "unknown table category {other:?}, expected A, B or C"
            ))),
        }
    }
}
