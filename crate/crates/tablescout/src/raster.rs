//! In-memory raster types plus file loading/saving.
//!
//! Pages are stored row-major. Grayscale uses 0 for black ink and 255 for
//! white background; binary images use 1 for ink (foreground) and 0 for
//! background. Both are immutable once a pipeline stage has produced them.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pnm;
use crate::Category;

/// 8-bit grayscale page, row-major, 0 = black ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        GrayImage {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::CorruptImage("zero image dimension".into()));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::CorruptImage(format!(
                "pixel buffer holds {} bytes, {}x{} needs {}",
                data.len(),
                width,
                height,
                width as usize * height as usize
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }
}

/// Bilevel page, row-major, 1 = ink (foreground).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl BinaryImage {
    pub fn blank(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        BinaryImage {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::CorruptImage("zero image dimension".into()));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::CorruptImage(format!(
                "pixel buffer holds {} bytes, {}x{} needs {}",
                data.len(),
                width,
                height,
                width as usize * height as usize
            )));
        }
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::CorruptImage(format!(
                "binary pixel value {bad} out of {{0, 1}}"
            )));
        }
        Ok(BinaryImage { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn is_fg(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize] == 1
    }

    #[inline]
    pub fn set_fg(&mut self, x: u32, y: u32, fg: bool) {
        self.data[y as usize * self.width as usize + x as usize] = fg as u8;
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    /// Total number of ink pixels.
    pub fn fg_count(&self) -> u64 {
        self.data.iter().map(|&v| v as u64).sum()
    }
}

/// Axis-aligned rectangle in pixel coordinates, `w`/`h` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// One past the rightmost column.
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    /// One past the bottom row.
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) as u64 * (y1 - y0) as u64
        }
    }

    fn fits_in(&self, width: u32, height: u32) -> bool {
        self.w > 0
            && self.h > 0
            && self.x < width
            && self.y < height
            && self.w <= width - self.x
            && self.h <= height - self.y
    }
}

/// Cuts `rect` out of `img`.
pub fn crop(img: &BinaryImage, rect: Rect) -> Result<BinaryImage> {
    if !rect.fits_in(img.width(), img.height()) {
        return Err(Error::OutOfBounds {
            rect,
            width: img.width(),
            height: img.height(),
        });
    }
    let mut data = Vec::with_capacity(rect.w as usize * rect.h as usize);
    for y in rect.y..rect.bottom() {
        let row = img.row(y);
        data.extend_from_slice(&row[rect.x as usize..rect.right() as usize]);
    }
    BinaryImage::from_raw(rect.w, rect.h, data)
}

/// Cuts `rect` out of a grayscale image.
pub fn crop_gray(img: &GrayImage, rect: Rect) -> Result<GrayImage> {
    if !rect.fits_in(img.width(), img.height()) {
        return Err(Error::OutOfBounds {
            rect,
            width: img.width(),
            height: img.height(),
        });
    }
    let mut data = Vec::with_capacity(rect.w as usize * rect.h as usize);
    for y in rect.y..rect.bottom() {
        let row = img.row(y);
        data.extend_from_slice(&row[rect.x as usize..rect.right() as usize]);
    }
    GrayImage::from_raw(rect.w, rect.h, data)
}

/// Copy of `gray` with a 2-pixel border burned in around every region.
///
/// Border gray level encodes the category: A = 0, B = 64, C = 128.
pub fn render_overlay(gray: &GrayImage, regions: &[(Rect, Category)]) -> Result<GrayImage> {
    for (rect, _) in regions {
        if !rect.fits_in(gray.width(), gray.height()) {
            return Err(Error::OutOfBounds {
                rect: *rect,
                width: gray.width(),
                height: gray.height(),
            });
        }
    }
    let mut out = gray.clone();
    for &(rect, category) in regions {
        let level = category.overlay_level();
        let thickness = 2.min(rect.w).min(rect.h);
        for y in rect.y..rect.bottom() {
            for x in rect.x..rect.right() {
                let on_border = x - rect.x < thickness
                    || rect.right() - 1 - x < thickness
                    || y - rect.y < thickness
                    || rect.bottom() - 1 - y < thickness;
                if on_border {
                    out.set(x, y, level);
                }
            }
        }
    }
    Ok(out)
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == ErrorKind::NotFound => Err(Error::FileNotFound(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}

/// Loads any supported image file as grayscale.
///
/// Portable anymap files (P1..P6) are supported natively; color pixels are
/// reduced to luminance with the rounded integer weights 299/587/114.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let mut reader = open_reader(path.as_ref())?;
    pnm::read_gray(&mut reader)
}

/// Loads a portable bitmap (P1/P4) as a binary image, 1 = black.
pub fn load_binary(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let mut reader = open_reader(path.as_ref())?;
    pnm::read_binary(&mut reader)
}

/// Writes a raw portable graymap (P5).
pub fn save_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    pnm::write_pgm_raw(&mut w, img)
}

/// Writes a raw portable bitmap (P4), ink as black.
pub fn save_pbm(path: impl AsRef<Path>, img: &BinaryImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    pnm::write_pbm_raw(&mut w, img)
}
