//! Portable anymap codecs.
//!
//! Reads all six classic variants (P1/P2/P3 plain, P4/P5/P6 raw) and writes
//! graymaps and bitmaps in both plain and raw form. The raw graymap/bitmap
//! writers and readers round-trip bit-exactly, which keeps goldens stable.
//! Color pixels collapse to luminance with integer weights 299/587/114
//! (rounded), so RGB (100, 200, 50) becomes 153.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, GrayImage};

/// Rounded integer luminance of one RGB pixel.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000) as u8
}

struct Scanner {
    data: Vec<u8>,
    pos: usize,
}

impl Scanner {
    fn new(mut reader: impl BufRead) -> Result<Self> {
        let mut data = Vec::new();
        reader.read_to_end(&mut data)?;
        Ok(Scanner { data, pos: 0 })
    }

    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(b) = self.peek() {
                    self.pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Reads one whitespace-delimited header or plain-format token.
    fn token(&mut self) -> Result<&[u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::CorruptImage("truncated header".into()));
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self) -> Result<u32> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                Error::CorruptImage(format!(
                    "expected a number, found {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }

    /// Reads the one whitespace byte that separates a raw header from data.
    fn raw_separator(&mut self) -> Result<()> {
        match self.peek() {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::CorruptImage(
                "raw pixel data must follow a single whitespace byte".into(),
            )),
        }
    }

    fn raw_bytes(&mut self, n: usize) -> Result<&[u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::CorruptImage(format!(
                "raw data truncated: wanted {n} bytes, found {}",
                self.data.len() - self.pos
            )));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    /// Reads one P1 pixel: a bare 0 or 1 digit, separators optional.
    fn bit(&mut self) -> Result<u8> {
        self.skip_space_and_comments();
        match self.peek() {
            Some(b'0') => {
                self.pos += 1;
                Ok(0)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(1)
            }
            _ => Err(Error::CorruptImage("plain bitmap data truncated".into())),
        }
    }
}

fn read_dimensions(s: &mut Scanner) -> Result<(u32, u32)> {
    let width = s.number()?;
    let height = s.number()?;
    if width == 0 || height == 0 {
        return Err(Error::CorruptImage("zero image dimension".into()));
    }
    if width as u64 * height as u64 > 1 << 31 {
        return Err(Error::CorruptImage(format!(
            "implausible image size {width}x{height}"
        )));
    }
    Ok((width, height))
}

fn read_maxval(s: &mut Scanner) -> Result<u32> {
    let maxval = s.number()?;
    if maxval == 0 {
        return Err(Error::CorruptImage("zero maxval".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "16-bit anymaps are not supported (maxval {maxval})"
        )));
    }
    Ok(maxval)
}

/// Rescales one sample from `maxval` to the 0..=255 range, rounding.
fn rescale(value: u32, maxval: u32) -> Result<u8> {
    if value > maxval {
        return Err(Error::CorruptImage(format!(
            "sample {value} exceeds maxval {maxval}"
        )));
    }
    Ok(((value * 255 + maxval / 2) / maxval) as u8)
}

fn unpack_bitmap_rows(s: &mut Scanner, width: u32, height: u32) -> Result<Vec<u8>> {
    let row_bytes = width.div_ceil(8) as usize;
    let mut data = Vec::with_capacity(width as usize * height as usize);
    for _ in 0..height {
        let row = s.raw_bytes(row_bytes)?;
        for x in 0..width as usize {
            let bit = (row[x / 8] >> (7 - (x % 8))) & 1;
            data.push(bit);
        }
    }
    Ok(data)
}

fn recognized_foreign_format(data: &[u8]) -> Option<&'static str> {
    if data.starts_with(&[0x89, b'P', b'N', b'G']) {
        Some("png")
    } else if data.starts_with(b"II*\0") || data.starts_with(b"MM\0*") {
        Some("tiff")
    } else {
        None
    }
}

/// Decodes any P1..P6 stream to grayscale.
///
/// Bitmap ink (1) maps to gray 0; color pixels collapse to luminance.
pub fn read_gray(reader: impl BufRead) -> Result<GrayImage> {
    let mut s = Scanner::new(reader)?;
    if let Some(name) = recognized_foreign_format(&s.data) {
        return Err(Error::UnsupportedFormat(format!(
            "{name} input is not supported, convert to a portable graymap first"
        )));
    }
    let magic = s.token()?.to_vec();
    match magic.as_slice() {
        b"P1" | b"P4" => {
            let bits = read_binary_body(&mut s, &magic)?;
            let data = bits.data().iter().map(|&b| if b == 1 { 0 } else { 255 }).collect();
            GrayImage::from_raw(bits.width(), bits.height(), data)
        }
        b"P2" => {
            let (width, height) = read_dimensions(&mut s)?;
            let maxval = read_maxval(&mut s)?;
            let mut data = Vec::with_capacity(width as usize * height as usize);
            for _ in 0..width as u64 * height as u64 {
                data.push(rescale(s.number()?, maxval)?);
            }
            GrayImage::from_raw(width, height, data)
        }
        b"P3" => {
            let (width, height) = read_dimensions(&mut s)?;
            let maxval = read_maxval(&mut s)?;
            let mut data = Vec::with_capacity(width as usize * height as usize);
            for _ in 0..width as u64 * height as u64 {
                let r = rescale(s.number()?, maxval)?;
                let g = rescale(s.number()?, maxval)?;
                let b = rescale(s.number()?, maxval)?;
                data.push(luminance(r, g, b));
            }
            GrayImage::from_raw(width, height, data)
        }
        b"P5" => {
            let (width, height) = read_dimensions(&mut s)?;
            let maxval = read_maxval(&mut s)?;
            s.raw_separator()?;
            let raw = s.raw_bytes(width as usize * height as usize)?.to_vec();
            let data = if maxval == 255 {
                raw
            } else {
                raw.into_iter()
                    .map(|v| rescale(v as u32, maxval))
                    .collect::<Result<_>>()?
            };
            GrayImage::from_raw(width, height, data)
        }
        b"P6" => {
            let (width, height) = read_dimensions(&mut s)?;
            let maxval = read_maxval(&mut s)?;
            s.raw_separator()?;
            let raw = s.raw_bytes(width as usize * height as usize * 3)?;
            let mut data = Vec::with_capacity(width as usize * height as usize);
            for px in raw.chunks_exact(3) {
                if maxval == 255 {
                    data.push(luminance(px[0], px[1], px[2]));
                } else {
                    let r = rescale(px[0] as u32, maxval)?;
                    let g = rescale(px[1] as u32, maxval)?;
                    let b = rescale(px[2] as u32, maxval)?;
                    data.push(luminance(r, g, b));
                }
            }
            GrayImage::from_raw(width, height, data)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "unknown magic {:?}",
            String::from_utf8_lossy(other)
        ))),
    }
}

fn read_binary_body(s: &mut Scanner, magic: &[u8]) -> Result<BinaryImage> {
    let (width, height) = read_dimensions(s)?;
    let data = match magic {
        b"P1" => {
            let mut data = Vec::with_capacity(width as usize * height as usize);
            for _ in 0..width as u64 * height as u64 {
                data.push(s.bit()?);
            }
            data
        }
        b"P4" => {
            s.raw_separator()?;
            unpack_bitmap_rows(s, width, height)?
        }
        _ => unreachable!("callers dispatch on magic"),
    };
    BinaryImage::from_raw(width, height, data)
}

/// Decodes a portable bitmap (P1/P4); black pixels become foreground.
pub fn read_binary(reader: impl BufRead) -> Result<BinaryImage> {
    let mut s = Scanner::new(reader)?;
    let magic = s.token()?.to_vec();
    match magic.as_slice() {
        b"P1" | b"P4" => read_binary_body(&mut s, &magic),
        other => Err(Error::UnsupportedFormat(format!(
            "expected a portable bitmap, found magic {:?}",
            String::from_utf8_lossy(other)
        ))),
    }
}

/// Writes a raw graymap (P5), maxval 255.
pub fn write_pgm_raw(mut w: impl Write, img: &GrayImage) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(img.data())?;
    Ok(())
}

/// Writes a plain graymap (P2) with lines kept within 70 columns.
pub fn write_pgm_plain(mut w: impl Write, img: &GrayImage) -> Result<()> {
    write!(w, "P2\n{} {}\n255\n", img.width(), img.height())?;
    write_wrapped_tokens(&mut w, img.data().iter().map(|v| v.to_string()))
}

/// Writes a raw bitmap (P4), foreground as black.
pub fn write_pbm_raw(mut w: impl Write, img: &BinaryImage) -> Result<()> {
    write!(w, "P4\n{} {}\n", img.width(), img.height())?;
    let row_bytes = img.width().div_ceil(8) as usize;
    let mut packed = vec![0u8; row_bytes];
    for y in 0..img.height() {
        packed.iter_mut().for_each(|b| *b = 0);
        for (x, &v) in img.row(y).iter().enumerate() {
            if v == 1 {
                packed[x / 8] |= 1 << (7 - (x % 8));
            }
        }
        w.write_all(&packed)?;
    }
    Ok(())
}

/// Writes a plain bitmap (P1) with lines kept within 70 columns.
pub fn write_pbm_plain(mut w: impl Write, img: &BinaryImage) -> Result<()> {
    write!(w, "P1\n{} {}\n", img.width(), img.height())?;
    write_wrapped_tokens(&mut w, img.data().iter().map(|v| v.to_string()))
}

fn write_wrapped_tokens(w: &mut impl Write, tokens: impl Iterator<Item = String>) -> Result<()> {
    let mut line_len = 0usize;
    for tok in tokens {
        if line_len == 0 {
            write!(w, "{tok}")?;
            line_len = tok.len();
        } else if line_len + 1 + tok.len() > 70 {
            write!(w, "\n{tok}")?;
            line_len = tok.len();
        } else {
            write!(w, " {tok}")?;
            line_len += 1 + tok.len();
        }
    }
    writeln!(w)?;
    Ok(())
}
