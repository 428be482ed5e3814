//! Page-local threshold derivation.
//!
//! The line with the most gaps is the page's "standard" line: a full line of
//! running text has more character and word gaps than any heading, rule or
//! table row. Its widest word space and its height anchor the two thresholds
//! every classification decision compares against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::TextLine;

/// Open interval the word-space multiplier must fall in.
pub const ALPHA_WS_BOUNDS: (f64, f64) = (1.0, 2.0);
/// Open interval the line-height multiplier must fall in.
pub const ALPHA_LH_BOUNDS: (f64, f64) = (1.0, 1.5);

/// Default word-space multiplier.
pub const ALPHA_WS_DEFAULT: f64 = 1.5;
/// Default line-height multiplier.
pub const ALPHA_LH_DEFAULT: f64 = 1.25;

/// Thresholds derived from one page's standard text line.
///
/// `ws` always lies strictly between `ws_std` and `2 * ws_std`, and `lh`
/// strictly between `lh_std` and `1.5 * lh_std`; the multipliers are
/// validated against those open intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageThresholds {
    /// Ordinal of the standard line within the page's line list.
    pub standard_line_index: usize,
    /// Standard line's widest word space, pixels.
    pub ws_std: u32,
    /// Standard line's height, pixels.
    pub lh_std: u32,
    /// Word-space threshold, `alpha_ws * ws_std`.
    pub ws: f64,
    /// Line-height threshold, `alpha_lh * lh_std`.
    pub lh: f64,
    pub alpha_ws: f64,
    pub alpha_lh: f64,
}

fn check_alpha(name: &'static str, value: f64, bounds: (f64, f64)) -> Result<()> {
    let (lo, hi) = bounds;
    if value > lo && value < hi {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange { name, value, lo, hi })
    }
}

/// Checks both multipliers against their open intervals.
pub fn validate_alphas(alpha_ws: f64, alpha_lh: f64) -> Result<()> {
    check_alpha("alpha_ws", alpha_ws, ALPHA_WS_BOUNDS)?;
    check_alpha("alpha_lh", alpha_lh, ALPHA_LH_BOUNDS)
}

/// Index of the line with the most gaps; ties go to the topmost line.
pub fn select_standard_line(lines: &[TextLine]) -> Result<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, line) in lines.iter().enumerate() {
        let gaps = line.gap_count();
        if gaps >= 1 && best.map_or(true, |(_, most)| gaps > most) {
            best = Some((i, gaps));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoTextLine)
}

/// Derives the page thresholds from the standard line.
pub fn compute_thresholds(
    lines: &[TextLine],
    alpha_ws: f64,
    alpha_lh: f64,
) -> Result<PageThresholds> {
    validate_alphas(alpha_ws, alpha_lh)?;
    let standard_line_index = select_standard_line(lines)?;
    let standard = &lines[standard_line_index];
    let ws_std = standard.max_word_space();
    let lh_std = standard.height();
    Ok(PageThresholds {
        standard_line_index,
        ws_std,
        lh_std,
        ws: alpha_ws * ws_std as f64,
        lh: alpha_lh * lh_std as f64,
        alpha_ws,
        alpha_lh,
    })
}
