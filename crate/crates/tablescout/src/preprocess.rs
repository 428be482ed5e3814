//! Page cleanup ahead of profiling: local adaptive binarization, removal of
//! dark scanner borders, and a light dilation that fuses glyph fragments
//! without closing word gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Side of the square neighborhood used by the local threshold; odd.
    pub bin_window: u32,
    /// Sensitivity of the local threshold, in (0, 1).
    pub bin_k: f64,
    /// Dynamic-range constant the local deviation is normalized by.
    pub bin_r: f64,
    /// Fraction of each edge scanned for border noise, in (0, 0.5).
    pub border_margin_frac: f64,
    /// Structuring element width, extends ink to the right.
    pub dilate_w: u32,
    /// Structuring element height, extends ink downward.
    pub dilate_h: u32,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            bin_window: 25,
            bin_k: 0.2,
            bin_r: 128.0,
            border_margin_frac: 0.05,
            dilate_w: 2,
            dilate_h: 2,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_window < 3 || self.bin_window % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "bin_window must be odd and at least 3, got {}",
                self.bin_window
            )));
        }
        if !(self.bin_k > 0.0 && self.bin_k < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "bin_k must lie in (0, 1), got {}",
                self.bin_k
            )));
        }
        if !(self.bin_r > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bin_r must be positive, got {}",
                self.bin_r
            )));
        }
        if !(self.border_margin_frac > 0.0 && self.border_margin_frac < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "border_margin_frac must lie in (0, 0.5), got {}",
                self.border_margin_frac
            )));
        }
        if self.dilate_w < 1 || self.dilate_h < 1 {
            return Err(Error::InvalidConfig(
                "structuring element dimensions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Thresholds each pixel against its local neighborhood.
///
/// A pixel is foreground iff `intensity <= T` with
/// `T = m * (1 + k * (s / R - 1))`, where `m` and `s` are the mean and
/// standard deviation over the `bin_window` square clamped at the borders.
/// Dark pixels in locally dark, flat areas stay ink; bright paper stays
/// background because `s < R` pulls `T` below the local mean.
pub fn binarize_adaptive(gray: &GrayImage, cfg: &PreprocessConfig) -> BinaryImage {
    let w = gray.width() as usize;
    let h = gray.height() as usize;
    let stride = w + 1;

    // prefix sums over intensity and its square, one extra zero row/column
    let mut sum = vec![0u64; stride * (h + 1)];
    let mut sq = vec![0u64; stride * (h + 1)];
    for y in 0..h {
        let row = gray.row(y as u32);
        let mut run = 0u64;
        let mut run_sq = 0u64;
        for x in 0..w {
            let v = row[x] as u64;
            run += v;
            run_sq += v * v;
            sum[(y + 1) * stride + (x + 1)] = sum[y * stride + (x + 1)] + run;
            sq[(y + 1) * stride + (x + 1)] = sq[y * stride + (x + 1)] + run_sq;
        }
    }
    let window_sum = |grid: &[u64], x0: usize, y0: usize, x1: usize, y1: usize| {
        grid[(y1 + 1) * stride + (x1 + 1)] + grid[y0 * stride + x0]
            - grid[y0 * stride + (x1 + 1)]
            - grid[(y1 + 1) * stride + x0]
    };

    let half = (cfg.bin_window / 2) as usize;
    let mut out = BinaryImage::blank(gray.width(), gray.height());
    for y in 0..h {
        let y0 = y.saturating_sub(half);
        let y1 = (y + half).min(h - 1);
        for x in 0..w {
            let x0 = x.saturating_sub(half);
            let x1 = (x + half).min(w - 1);
            let count = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
            let mean = window_sum(&sum, x0, y0, x1, y1) as f64 / count;
            let var = (window_sum(&sq, x0, y0, x1, y1) as f64 / count - mean * mean).max(0.0);
            let threshold = mean * (1.0 + cfg.bin_k * (var.sqrt() / cfg.bin_r - 1.0));
            if gray.get(x as u32, y as u32) as f64 <= threshold {
                out.set_fg(x as u32, y as u32, true);
            }
        }
    }
    out
}

/// Clears ink components that both touch the outer image boundary and sit
/// entirely inside the margin band; everything else is untouched, so real
/// text that merely grazes the band survives.
pub fn remove_border_noise(bin: &BinaryImage, cfg: &PreprocessConfig) -> BinaryImage {
    let w = bin.width();
    let h = bin.height();
    let band_x = (cfg.border_margin_frac * w as f64) as u32;
    let band_y = (cfg.border_margin_frac * h as f64) as u32;
    let in_band =
        |x: u32, y: u32| x < band_x || x >= w - band_x || y < band_y || y >= h - band_y;
    let on_boundary = |x: u32, y: u32| x == 0 || y == 0 || x == w - 1 || y == h - 1;

    let mut out = bin.clone();
    let mut visited = vec![false; w as usize * h as usize];
    let mut stack = Vec::new();
    let mut component = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            let start = (sy * w + sx) as usize;
            if visited[start] || !bin.is_fg(sx, sy) {
                continue;
            }
            visited[start] = true;
            stack.push((sx, sy));
            component.clear();
            let mut touches = false;
            let mut contained = true;
            while let Some((x, y)) = stack.pop() {
                component.push((x, y));
                touches |= on_boundary(x, y);
                contained &= in_band(x, y);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as u32, ny as u32);
                        let ni = (ny * w + nx) as usize;
                        if !visited[ni] && bin.is_fg(nx, ny) {
                            visited[ni] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            if touches && contained {
                for &(x, y) in &component {
                    out.set_fg(x, y, false);
                }
            }
        }
    }
    out
}

/// Morphological dilation with a solid `dilate_w`x`dilate_h` rectangle
/// anchored at its top-left cell, so ink grows rightward and downward.
pub fn dilate(bin: &BinaryImage, cfg: &PreprocessConfig) -> BinaryImage {
    let w = bin.width();
    let h = bin.height();
    let reach_x = cfg.dilate_w - 1;
    let reach_y = cfg.dilate_h - 1;

    // separable: spread each row to the right, then each column downward
    let mut horiz = BinaryImage::blank(w, h);
    for y in 0..h {
        let mut last_fg: Option<u32> = None;
        for x in 0..w {
            if bin.is_fg(x, y) {
                last_fg = Some(x);
            }
            if matches!(last_fg, Some(fx) if x - fx <= reach_x) {
                horiz.set_fg(x, y, true);
            }
        }
    }
    let mut out = BinaryImage::blank(w, h);
    for x in 0..w {
        let mut last_fg: Option<u32> = None;
        for y in 0..h {
            if horiz.is_fg(x, y) {
                last_fg = Some(y);
            }
            if matches!(last_fg, Some(fy) if y - fy <= reach_y) {
                out.set_fg(x, y, true);
            }
        }
    }
    out
}
