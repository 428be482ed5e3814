//! Deterministic synthetic page generator with exact ground truth.
//!
//! Pages are built from stacked blocks: paragraphs of fake text, three table
//! shapes, standalone rules, and wide-gap header lines. "Characters" are
//! solid ink rectangles, so the drawn extents are known exactly and become
//! the ground truth. Given the same [`PageSpec`], `generate` produces
//! byte-identical images on every run and platform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{GroundTruth, TruthEntry};
use crate::raster::{GrayImage, Rect};
use crate::Category;

/// Blank frame kept around all page content, in pixels.
pub const MARGIN: u32 = 30;
/// Width of one character rectangle.
const CHAR_W: u32 = 6;
/// Vertical blank between consecutive lines of a paragraph or table rows.
const LINE_SPACING: u32 = 8;
/// Vertical blank between consecutive blocks.
const BLOCK_SPACING: u32 = 12;
/// Widest word a table cell will hold, in pixels.
const CELL_W: u32 = 30;
/// Column gap used by ruled tables (unruled tables choose their own).
const RULED_TABLE_COL_GAP: u32 = 40;
/// Blank rows between a table rule and the adjacent row of cells.
const RULE_PAD: u32 = 6;
/// Blank pixels between a grid cell's border and its ink.
const CELL_PAD: u32 = 4;

/// SplitMix64: a tiny, well-known 64-bit mixing generator. Chosen because
/// the whole algorithm fits in a doc comment, so fixtures stay portable:
///
/// ```text
/// state += 0x9E3779B97F4A7C15
/// z = state
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// output = z ^ (z >> 31)
/// ```
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `lo..=hi`. The tiny modulo bias is irrelevant for
    /// layout jitter and keeps the generator trivially portable.
    pub fn in_range(&mut self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as u32
    }

    /// True with probability `rate`.
    pub fn chance(&mut self, rate: f64) -> bool {
        ((self.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < rate
    }
}

/// One content block, stacked top to bottom in spec order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    /// Plain running text.
    Paragraph { lines: u32 },
    /// Fully ruled grid: every cell boxed by rules.
    TableA { rows: u32, cols: u32, rule_px: u32 },
    /// Rows of aligned cells with horizontal rules above the header,
    /// below it, and under the last row.
    TableB { rows: u32, cols: u32, rule_px: u32 },
    /// Rows of aligned cells separated only by wide column gaps.
    TableC { rows: u32, cols: u32, col_gap_px: u32 },
    /// One line split into two word groups by an extra-wide gap, like a
    /// journal masthead ("NAME ......... VOL. 3").
    HeaderLine { gap_px: u32 },
    /// A standalone horizontal rule spanning the text width.
    Rule { rule_px: u32 },
}

/// Pixel noise added after content is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Per-pixel flip probability (ink turns white, blank turns ink).
    pub salt_pepper_rate: f64,
    /// Draw a dark streak hugging the page edge, as left by a scanner lid.
    pub border_smear: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { salt_pepper_rate: 0.0, border_smear: false }
    }
}

/// Complete, deterministic description of one synthetic page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageSpec {
    pub seed: u64,
    /// Page (width, height) in pixels.
    pub page: (u32, u32),
    pub text_line_height: u32,
    /// Target word width in pixels (inclusive range).
    pub word_len_range: (u32, u32),
    /// Blank pixels between words (inclusive range).
    pub word_gap_range: (u32, u32),
    /// Blank pixels between character rectangles (inclusive range).
    pub char_gap_range: (u32, u32),
    pub blocks: Vec<Block>,
    pub noise: NoiseSpec,
}

impl Default for PageSpec {
    fn default() -> Self {
        PageSpec {
            seed: 0,
            page: (820, 1060),
            text_line_height: 14,
            word_len_range: (18, 42),
            word_gap_range: (8, 13),
            char_gap_range: (3, 5),
            blocks: Vec::new(),
            noise: NoiseSpec::default(),
        }
    }
}

impl PageSpec {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("bad page spec: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.page;
        if w < 4 * MARGIN || h < 4 * MARGIN {
            return Err(Error::InvalidSpec(format!(
                "page {w}x{h} is too small, need at least {0}x{0}",
                4 * MARGIN
            )));
        }
        if !(8..=60).contains(&self.text_line_height) {
            return Err(Error::InvalidSpec(format!(
                "text_line_height {} outside 8..=60",
                self.text_line_height
            )));
        }
        for (name, (lo, hi)) in [
            ("word_len_range", self.word_len_range),
            ("word_gap_range", self.word_gap_range),
            ("char_gap_range", self.char_gap_range),
        ] {
            if lo < 1 || lo > hi {
                return Err(Error::InvalidSpec(format!("{name} ({lo}, {hi}) is not a valid range")));
            }
        }
        if !(0.0..=1.0).contains(&self.noise.salt_pepper_rate) {
            return Err(Error::InvalidSpec(format!(
                "salt_pepper_rate {} outside 0..=1",
                self.noise.salt_pepper_rate
            )));
        }
        for block in &self.blocks {
            self.validate_block(block)?;
        }
        Ok(())
    }

    fn validate_block(&self, block: &Block) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidSpec(msg));
        match *block {
            Block::Paragraph { lines } => {
                if lines == 0 {
                    return err("paragraph needs at least 1 line".into());
                }
            }
            Block::TableA { rows, cols, rule_px } => {
                if rows < 3 || cols < 1 || rule_px < 1 {
                    return err(format!(
                        "ruled grid needs rows >= 3, cols >= 1, rule_px >= 1, got {rows}/{cols}/{rule_px}"
                    ));
                }
                // the grid must read as one unusually tall band
                let grid_h = (rows + 1) * rule_px + rows * (self.text_line_height + 2 * CELL_PAD);
                if grid_h < 4 * self.text_line_height {
                    return err(format!(
                        "ruled grid height {grid_h} is under 4 text-line heights"
                    ));
                }
                let grid_w = (cols + 1) * rule_px + cols * (CELL_W + 2 * CELL_PAD);
                self.check_table_width(grid_w)?;
            }
            Block::TableB { rows, cols, rule_px } => {
                if rows < 1 || cols < 2 || rule_px < 1 {
                    return err(format!(
                        "ruled-row table needs rows >= 1, cols >= 2, rule_px >= 1, got {rows}/{cols}/{rule_px}"
                    ));
                }
                if rule_px >= self.text_line_height {
                    return err("rule_px must stay below text_line_height".into());
                }
                self.check_table_width(cols * CELL_W + (cols - 1) * RULED_TABLE_COL_GAP)?;
            }
            Block::TableC { rows, cols, col_gap_px } => {
                if rows < 3 || cols < 2 {
                    return err(format!(
                        "column-gap table needs rows >= 3, cols >= 2, got {rows}/{cols}"
                    ));
                }
                // column gaps must dwarf ordinary word gaps to be findable
                if col_gap_px < 2 * self.word_gap_range.1 {
                    return err(format!(
                        "col_gap_px {} must be at least twice the widest word gap {}",
                        col_gap_px, self.word_gap_range.1
                    ));
                }
                self.check_table_width(cols * CELL_W + (cols - 1) * col_gap_px)?;
            }
            Block::HeaderLine { gap_px } => {
                if gap_px < 2 * self.word_gap_range.1 {
                    return err(format!(
                        "header gap_px {} must be at least twice the widest word gap {}",
                        gap_px, self.word_gap_range.1
                    ));
                }
            }
            Block::Rule { rule_px } => {
                if rule_px < 1 || rule_px >= self.text_line_height {
                    return err(format!(
                        "standalone rule_px {rule_px} must be in 1..text_line_height"
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_table_width(&self, table_w: u32) -> Result<()> {
        let content_w = self.page.0 - 2 * MARGIN;
        if table_w > content_w {
            return Err(Error::InvalidSpec(format!(
                "table width {table_w} exceeds the {content_w}px content area"
            )));
        }
        Ok(())
    }
}

/// A generated page: pixels, exact truth, and the line bands that were drawn.
#[derive(Debug, Clone)]
pub struct SynthPage {
    pub image: GrayImage,
    pub truth: GroundTruth,
    /// Inclusive (y_top, y_bottom) of every rendered line band, top to
    /// bottom; a fully ruled grid contributes a single tall band.
    pub line_bands: Vec<(u32, u32)>,
}

struct Canvas {
    img: GrayImage,
}

impl Canvas {
    fn ink_rect(&mut self, x: u32, y: u32, w: u32, h: u32) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.img.set(xx, yy, 0);
            }
        }
    }
}

struct Renderer<'a> {
    spec: &'a PageSpec,
    rng: SplitMix64,
    canvas: Canvas,
    x_right: u32,
    truth: Vec<TruthEntry>,
    bands: Vec<(u32, u32)>,
}

impl<'a> Renderer<'a> {
    /// Draws one word starting at `x`, at most `target_w` wide, clipped to
    /// `limit`. Returns one past the last ink column, or `x` if nothing fit.
    fn word(&mut self, x: u32, y: u32, target_w: u32, limit: u32) -> u32 {
        let tlh = self.spec.text_line_height;
        let n_chars = (target_w / (CHAR_W + 4)).max(1);
        let mut cx = x;
        let mut end = x;
        for k in 0..n_chars {
            if cx + CHAR_W > limit {
                break;
            }
            self.canvas.ink_rect(cx, y, CHAR_W, tlh);
            end = cx + CHAR_W;
            if k + 1 < n_chars {
                let (glo, ghi) = self.spec.char_gap_range;
                cx = end + self.rng.in_range(glo, ghi);
            }
        }
        end
    }

    /// Fills one line of running text across the content width.
    fn text_line(&mut self, y: u32) {
        let mut x = MARGIN;
        loop {
            let (wlo, whi) = self.spec.word_len_range;
            let target = self.rng.in_range(wlo, whi);
            let end = self.word(x, y, target, self.x_right);
            if end == x {
                break;
            }
            let (glo, ghi) = self.spec.word_gap_range;
            x = end + self.rng.in_range(glo, ghi);
            if x + CHAR_W > self.x_right {
                break;
            }
        }
        self.bands.push((y, y + self.spec.text_line_height - 1));
    }

    fn paragraph(&mut self, y: u32, lines: u32) -> u32 {
        let tlh = self.spec.text_line_height;
        for i in 0..lines {
            self.text_line(y + i * (tlh + LINE_SPACING));
        }
        lines * tlh + (lines - 1) * LINE_SPACING
    }

    /// One row of left-aligned cell words on fixed column origins.
    /// Returns the rightmost ink column of the row.
    fn cell_row(&mut self, x0: u32, y: u32, cols: u32, col_gap: u32) -> u32 {
        let mut max_end = x0;
        for c in 0..cols {
            let cx = x0 + c * (CELL_W + col_gap);
            let (wlo, whi) = self.spec.word_len_range;
            let target = self.rng.in_range(wlo, whi).min(CELL_W);
            let end = self.word(cx, y, target, cx + CELL_W);
            max_end = max_end.max(end);
        }
        self.bands.push((y, y + self.spec.text_line_height - 1));
        max_end
    }

    fn table_a(&mut self, y: u32, rows: u32, cols: u32, rule_px: u32) -> u32 {
        let tlh = self.spec.text_line_height;
        let cell_h = tlh + 2 * CELL_PAD;
        let grid_w = (cols + 1) * rule_px + cols * (CELL_W + 2 * CELL_PAD);
        let grid_h = (rows + 1) * rule_px + rows * cell_h;
        let x0 = MARGIN + (self.x_right - MARGIN).saturating_sub(grid_w) / 2;
        for r in 0..=rows {
            self.canvas.ink_rect(x0, y + r * (rule_px + cell_h), grid_w, rule_px);
        }
        for c in 0..=cols {
            self.canvas.ink_rect(x0 + c * (rule_px + CELL_W + 2 * CELL_PAD), y, rule_px, grid_h);
        }
        for r in 0..rows {
            let cy = y + rule_px + r * (rule_px + cell_h) + CELL_PAD;
            for c in 0..cols {
                let cx = x0 + rule_px + c * (rule_px + CELL_W + 2 * CELL_PAD) + CELL_PAD;
                let (wlo, whi) = self.spec.word_len_range;
                let target = self.rng.in_range(wlo, whi).min(CELL_W);
                self.word(cx, cy, target, cx + CELL_W);
            }
        }
        self.truth.push(TruthEntry {
            rect: Rect::new(x0, y, grid_w, grid_h),
            category: Category::A,
        });
        self.bands.push((y, y + grid_h - 1));
        grid_h
    }

    /// Horizontal rule that is also recorded as its own line band.
    fn hrule(&mut self, x0: u32, y: u32, w: u32, rule_px: u32) {
        self.canvas.ink_rect(x0, y, w, rule_px);
        self.bands.push((y, y + rule_px - 1));
    }

    fn table_b(&mut self, y: u32, rows: u32, cols: u32, rule_px: u32) -> u32 {
        let tlh = self.spec.text_line_height;
        let table_w = cols * CELL_W + (cols - 1) * RULED_TABLE_COL_GAP;
        let x0 = MARGIN + (self.x_right - MARGIN).saturating_sub(table_w) / 2;
        let row_pitch = tlh + LINE_SPACING;
        let mut cy = y;
        self.hrule(x0, cy, table_w, rule_px);
        cy += rule_px + RULE_PAD;
        self.cell_row(x0, cy, cols, RULED_TABLE_COL_GAP);
        cy += tlh + RULE_PAD;
        self.hrule(x0, cy, table_w, rule_px);
        cy += rule_px + RULE_PAD;
        for r in 0..rows {
            self.cell_row(x0, cy + r * row_pitch, cols, RULED_TABLE_COL_GAP);
        }
        cy += (rows - 1) * row_pitch + tlh + RULE_PAD;
        self.hrule(x0, cy, table_w, rule_px);
        let height = cy + rule_px - y;
        self.truth.push(TruthEntry {
            rect: Rect::new(x0, y, table_w, height),
            category: Category::B,
        });
        height
    }

    fn table_c(&mut self, y: u32, rows: u32, cols: u32, col_gap: u32) -> u32 {
        let tlh = self.spec.text_line_height;
        let table_w = cols * CELL_W + (cols - 1) * col_gap;
        let x0 = MARGIN + (self.x_right - MARGIN).saturating_sub(table_w) / 2;
        let row_pitch = tlh + LINE_SPACING;
        let mut max_end = x0;
        for r in 0..rows {
            max_end = max_end.max(self.cell_row(x0, y + r * row_pitch, cols, col_gap));
        }
        let height = (rows - 1) * row_pitch + tlh;
        self.truth.push(TruthEntry {
            rect: Rect::new(x0, y, max_end - x0, height),
            category: Category::C,
        });
        height
    }

    /// Renders up to `count` words starting at `x`; returns one past the
    /// last ink column, or `x` when nothing fit.
    fn word_group(&mut self, x: u32, y: u32, count: u32) -> u32 {
        let mut x = x;
        let mut last_end = x;
        for i in 0..count {
            if i > 0 {
                let (glo, ghi) = self.spec.word_gap_range;
                x = last_end + self.rng.in_range(glo, ghi);
            }
            let (wlo, whi) = self.spec.word_len_range;
            let target = self.rng.in_range(wlo, whi);
            let end = self.word(x, y, target, self.x_right);
            if end == x {
                break;
            }
            last_end = end;
        }
        last_end
    }

    fn header_line(&mut self, y: u32, gap_px: u32) -> u32 {
        let tlh = self.spec.text_line_height;
        let left_end = self.word_group(MARGIN, y, 3);
        self.word_group(left_end + gap_px, y, 2);
        self.bands.push((y, y + tlh - 1));
        tlh
    }

    fn standalone_rule(&mut self, y: u32, rule_px: u32) -> u32 {
        self.canvas.ink_rect(MARGIN, y, self.x_right - MARGIN, rule_px);
        self.bands.push((y, y + rule_px - 1));
        rule_px
    }

    fn block_height(&self, block: &Block) -> u32 {
        let tlh = self.spec.text_line_height;
        match *block {
            Block::Paragraph { lines } => lines * tlh + (lines - 1) * LINE_SPACING,
            Block::TableA { rows, cols: _, rule_px } => {
                (rows + 1) * rule_px + rows * (tlh + 2 * CELL_PAD)
            }
            Block::TableB { rows, rule_px, .. } => {
                3 * rule_px + 4 * RULE_PAD + tlh + rows * tlh + (rows - 1) * LINE_SPACING
            }
            Block::TableC { rows, .. } => rows * tlh + (rows - 1) * LINE_SPACING,
            Block::HeaderLine { .. } => tlh,
            Block::Rule { rule_px } => rule_px,
        }
    }

    fn render_block(&mut self, block: &Block, y: u32) -> u32 {
        match *block {
            Block::Paragraph { lines } => self.paragraph(y, lines),
            Block::TableA { rows, cols, rule_px } => self.table_a(y, rows, cols, rule_px),
            Block::TableB { rows, cols, rule_px } => self.table_b(y, rows, cols, rule_px),
            Block::TableC { rows, cols, col_gap_px } => self.table_c(y, rows, cols, col_gap_px),
            Block::HeaderLine { gap_px } => self.header_line(y, gap_px),
            Block::Rule { rule_px } => self.standalone_rule(y, rule_px),
        }
    }
}

/// Renders a page spec to pixels plus exact ground truth.
pub fn generate(page_id: &str, spec: &PageSpec) -> Result<SynthPage> {
    spec.validate()?;
    let (w, h) = spec.page;
    let mut r = Renderer {
        spec,
        rng: SplitMix64::new(spec.seed),
        canvas: Canvas { img: GrayImage::filled(w, h, 255) },
        x_right: w - MARGIN,
        truth: Vec::new(),
        bands: Vec::new(),
    };

    // reject layouts that would spill past the bottom margin before drawing
    let mut needed = MARGIN;
    for (i, block) in spec.blocks.iter().enumerate() {
        if i > 0 {
            needed += BLOCK_SPACING;
        }
        needed += r.block_height(block);
    }
    needed += MARGIN;
    if needed > h {
        return Err(Error::SpecOverflow { needed, available: h });
    }

    let mut y = MARGIN;
    for (i, block) in spec.blocks.iter().enumerate() {
        if i > 0 {
            y += BLOCK_SPACING;
        }
        let consumed = r.render_block(block, y);
        y += consumed;
    }

    if spec.noise.border_smear {
        let side = r.rng.next_u64() % 2;
        let thickness = r.rng.in_range(3, 6);
        if side == 0 {
            let y0 = r.rng.in_range(0, h / 2);
            let len = r.rng.in_range(h / 6, h / 3).min(h - y0);
            r.canvas.ink_rect(0, y0, thickness, len);
        } else {
            let x0 = r.rng.in_range(0, w / 2);
            let len = r.rng.in_range(w / 6, w / 3).min(w - x0);
            r.canvas.ink_rect(x0, 0, len, thickness);
        }
    }
    if spec.noise.salt_pepper_rate > 0.0 {
        let rate = spec.noise.salt_pepper_rate;
        for yy in 0..h {
            for xx in 0..w {
                if r.rng.chance(rate) {
                    let old = r.canvas.img.get(xx, yy);
                    r.canvas.img.set(xx, yy, if old == 0 { 255 } else { 0 });
                }
            }
        }
    }

    Ok(SynthPage {
        image: r.canvas.img,
        truth: GroundTruth::new(page_id, r.truth),
        line_bands: r.bands,
    })
}

fn desk_spec(category: Category, i: u32) -> PageSpec {
    let rows = 3 + i % 3;
    let cols = 2 + i % 3;
    let table = match category {
        Category::A => Block::TableA { rows, cols, rule_px: 2 },
        Category::B => Block::TableB { rows, cols, rule_px: 2 },
        Category::C => Block::TableC { rows, cols, col_gap_px: 40 },
    };
    let ordinal = match category {
        Category::A => 0u64,
        Category::B => 1,
        Category::C => 2,
    };
    let mut blocks = vec![Block::Paragraph { lines: 3 + i % 3 }];
    if i % 2 == 0 {
        blocks.push(Block::Paragraph { lines: 2 });
    }
    blocks.push(table);
    blocks.push(Block::Paragraph { lines: 2 + (i + 1) % 3 });
    PageSpec {
        seed: 0xDE5C_0000 + ordinal * 1000 + i as u64,
        page: (820 + (i % 5) * 20, 1060 + (i % 4) * 25),
        text_line_height: 14 + i % 3,
        blocks,
        noise: NoiseSpec::default(),
        ..PageSpec::default()
    }
}

/// The fixed 90-page test corpus: 30 pages per table category, one table
/// per page, surrounded by paragraphs. Returns (page_id, spec) pairs.
pub fn desk_suite() -> Vec<(String, PageSpec)> {
    let mut out = Vec::with_capacity(90);
    for (tag, category) in [("a", Category::A), ("b", Category::B), ("c", Category::C)] {
        for i in 0..30 {
            out.push((format!("desk_{tag}_{i:02}"), desk_spec(category, i)));
        }
    }
    out
}

/// Ten table-free pages of plain paragraphs, for false-positive checks.
pub fn control_suite() -> Vec<(String, PageSpec)> {
    (0..10)
        .map(|i| {
            let spec = PageSpec {
                seed: 0xC0_0000 + i as u64,
                page: (820 + (i % 3) * 30, 1060),
                text_line_height: 14 + i % 3,
                blocks: vec![
                    Block::Paragraph { lines: 4 + i % 4 },
                    Block::Paragraph { lines: 3 },
                    Block::Paragraph { lines: 5 - i % 3 },
                ],
                noise: NoiseSpec::default(),
                ..PageSpec::default()
            };
            (format!("control_{i:02}"), spec)
        })
        .collect()
}
