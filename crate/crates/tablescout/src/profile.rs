//! Projection-profile line segmentation and per-line gap analysis.
//!
//! The row-sum profile cuts the page into horizontal bands; each band then
//! gets its blank-column runs measured, yielding one [`TextLine`] per band
//! with its height and the width of its widest internal blank run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileConfig {
    /// Ink pixels per row below which the row counts as blank. The default
    /// of 1 means any ink marks a row as content; 0 treats every row as
    /// content and is only useful for diagnostics.
    pub row_noise_floor: u32,
    /// Blank-row run length that separates two lines; shorter runs merge.
    pub min_blank_rows: u32,
    /// Minimum blank-column run width counted as a gap.
    pub min_gap_px: u32,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            row_noise_floor: 1,
            min_blank_rows: 2,
            min_gap_px: 2,
        }
    }
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_blank_rows < 1 {
            return Err(Error::InvalidConfig("min_blank_rows must be at least 1".into()));
        }
        if self.min_gap_px < 1 {
            return Err(Error::InvalidConfig("min_gap_px must be at least 1".into()));
        }
        Ok(())
    }
}

/// One maximal blank-column run inside a text line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    /// First blank column of the run (inclusive).
    pub x_start: u32,
    /// Run width in pixels.
    pub width: u32,
}

/// One segmented line band with its measured gap structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    /// Ordinal from the top of the page, 0-based.
    pub index: usize,
    pub y_top: u32,
    /// Inclusive bottom row.
    pub y_bottom: u32,
    /// Blank-column runs strictly between the first and last inked columns,
    /// each at least `min_gap_px` wide, ordered by `x_start`.
    pub gaps: Vec<Gap>,
    /// Leftmost inked column of the band.
    pub x_first_ink: u32,
    /// Rightmost inked column of the band (inclusive).
    pub x_last_ink: u32,
}

impl TextLine {
    /// Band height in pixels.
    pub fn height(&self) -> u32 {
        self.y_bottom - self.y_top + 1
    }

    pub fn gap_count(&self) -> usize {
        self.gaps.len()
    }

    /// Widest gap in the line, 0 when the line has none.
    pub fn max_word_space(&self) -> u32 {
        self.gaps.iter().map(|g| g.width).max().unwrap_or(0)
    }
}

/// Per-row ink counts, top to bottom.
pub fn horizontal_projection(bin: &BinaryImage) -> Vec<u32> {
    (0..bin.height())
        .map(|y| bin.row(y).iter().map(|&v| v as u32).sum())
        .collect()
}

/// Cuts the profile into line bands.
///
/// A row is content when its count reaches `row_noise_floor`; maximal
/// content runs separated by fewer than `min_blank_rows` blank rows merge
/// into a single band. Bands are returned top to bottom and never overlap.
pub fn segment_lines(profile: &[u32], cfg: &ProfileConfig) -> Vec<(u32, u32)> {
    let mut bands: Vec<(u32, u32)> = Vec::new();
    let mut run_start: Option<u32> = None;
    for (y, &count) in profile.iter().enumerate() {
        let content = count >= cfg.row_noise_floor;
        match (content, run_start) {
            (true, None) => run_start = Some(y as u32),
            (false, Some(start)) => {
                push_or_merge(&mut bands, (start, y as u32 - 1), cfg.min_blank_rows);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = run_start {
        push_or_merge(&mut bands, (start, profile.len() as u32 - 1), cfg.min_blank_rows);
    }
    bands
}

fn push_or_merge(bands: &mut Vec<(u32, u32)>, run: (u32, u32), min_blank_rows: u32) {
    if let Some(last) = bands.last_mut() {
        if run.0 - last.1 - 1 < min_blank_rows {
            last.1 = run.1;
            return;
        }
    }
    bands.push(run);
}

/// Measures the blank-column structure of one band.
pub fn analyze_gaps(
    bin: &BinaryImage,
    band: (u32, u32),
    index: usize,
    cfg: &ProfileConfig,
) -> Result<TextLine> {
    let (y_top, y_bottom) = band;
    if y_top > y_bottom || y_bottom >= bin.height() {
        return Err(Error::OutOfBounds {
            rect: Rect::new(0, y_top, bin.width(), y_bottom.saturating_sub(y_top) + 1),
            width: bin.width(),
            height: bin.height(),
        });
    }

    let mut inked = vec![false; bin.width() as usize];
    for y in y_top..=y_bottom {
        for (x, &v) in bin.row(y).iter().enumerate() {
            inked[x] |= v == 1;
        }
    }
    let x_first_ink = inked.iter().position(|&c| c);
    let Some(x_first_ink) = x_first_ink else {
        return Err(Error::EmptyBand { top: y_top, bottom: y_bottom });
    };
    let x_last_ink = inked.iter().rposition(|&c| c).unwrap();

    let mut gaps = Vec::new();
    let mut blank_start: Option<usize> = None;
    for x in x_first_ink..=x_last_ink {
        match (inked[x], blank_start) {
            (false, None) => blank_start = Some(x),
            (true, Some(start)) => {
                let width = (x - start) as u32;
                if width >= cfg.min_gap_px {
                    gaps.push(Gap { x_start: start as u32, width });
                }
                blank_start = None;
            }
            _ => {}
        }
    }

    Ok(TextLine {
        index,
        y_top,
        y_bottom,
        gaps,
        x_first_ink: x_first_ink as u32,
        x_last_ink: x_last_ink as u32,
    })
}

/// Segments the page and analyzes every band, top to bottom.
pub fn build_page(bin: &BinaryImage, cfg: &ProfileConfig) -> Result<Vec<TextLine>> {
    let profile = horizontal_projection(bin);
    segment_lines(&profile, cfg)
        .into_iter()
        .enumerate()
        .map(|(index, band)| analyze_gaps(bin, band, index, cfg))
        .collect()
}
