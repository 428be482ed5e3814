//! Line classification and region assembly.
//!
//! Every segmented line gets exactly one class by testing four branches in
//! fixed priority order against the page thresholds. Flagged lines are then
//! merged into rectangular table regions: tall zero-gap blocks stand alone
//! as category A; runs of columnar and rule lines become category B when at
//! least two rule lines participate, otherwise category C.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::preprocess::{binarize_adaptive, dilate, remove_border_noise};
use crate::profile::{build_page, TextLine};
use crate::raster::{GrayImage, Rect};
use crate::thresholds::{compute_thresholds, PageThresholds};
use crate::Category;

pub const REPORT_SCHEMA: u32 = 1;

/// Diagnostic string recorded when a page has no gapped text line.
pub const DIAG_NO_TEXT_LINE: &str = "no_text_line";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineClass {
    /// Ordinary running text; never contributes to a region.
    Text,
    /// Tall band without any gap: a fully ruled table binds into one block.
    TypeABlock,
    /// Normal-height line whose widest space exceeds the word-space
    /// threshold: a table row of aligned columns.
    ColumnarCandidate,
    /// Thin gapless band next to columnar content: a horizontal rule.
    RuleLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Minimum non-text member lines a columnar/rule run must have.
    pub min_table_lines: usize,
    /// Text lines tolerated in a row strictly inside a run, so tables with
    /// multi-line headings are not split apart.
    pub max_interior_text_lines: usize,
    /// Fraction of the page height at the top and bottom whose lines are
    /// treated as plain text (running headers, footers, page numbers).
    /// 0 disables the exclusion.
    pub header_footer_exclusion_frac: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            min_table_lines: 3,
            max_interior_text_lines: 1,
            header_footer_exclusion_frac: 0.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_table_lines < 2 {
            return Err(Error::InvalidConfig(format!(
                "min_table_lines must be at least 2, got {}",
                self.min_table_lines
            )));
        }
        if !(0.0..0.5).contains(&self.header_footer_exclusion_frac) {
            return Err(Error::InvalidConfig(format!(
                "header_footer_exclusion_frac must lie in [0, 0.5), got {}",
                self.header_footer_exclusion_frac
            )));
        }
        Ok(())
    }
}

/// One detected table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRegion {
    /// Bounding box from the member bands' vertical extent and the union of
    /// their inked horizontal extents.
    pub rect: Rect,
    pub category: Category,
    /// Ordinals of the member lines, including tolerated interior text.
    pub line_indices: Vec<usize>,
    /// Rule lines among the members.
    pub rule_line_count: usize,
}

/// Everything detection measured on one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub schema: u32,
    pub page_id: String,
    /// (width, height) in pixels.
    pub page_size: (u32, u32),
    /// Set when the page could not be thresholded (e.g. no gapped line).
    pub diagnostic: Option<String>,
    pub thresholds: Option<PageThresholds>,
    pub lines: Vec<LineRecord>,
    pub regions: Vec<TableRegion>,
    pub config_fingerprint: String,
}

/// Per-line measurements and the assigned class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub index: usize,
    pub y_top: u32,
    pub y_bottom: u32,
    pub height: u32,
    pub gap_count: usize,
    pub max_word_space: u32,
    pub class: LineClass,
}

impl DetectionReport {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("bad report: {e}")))
    }
}

/// Assigns one class per line. Branches are tested in a fixed priority
/// order; the first match wins:
///
/// 1. height ≥ 3·lh and no gaps → [`LineClass::TypeABlock`]
/// 2. widest space > ws and height ≤ lh → [`LineClass::ColumnarCandidate`]
/// 3. no gaps, height < lh, and either vertical neighbor's widest space
///    > ws → [`LineClass::RuleLine`] (missing neighbors count as false)
/// 4. otherwise → [`LineClass::Text`]
///
/// All comparisons are real-valued against the fractional thresholds.
pub fn classify_lines(lines: &[TextLine], th: &PageThresholds) -> Vec<LineClass> {
    classify_lines_excluding(lines, th, &vec![false; lines.len()])
}

/// [`classify_lines`] with a per-line exclusion mask: excluded lines are
/// forced to text and their word spaces are invisible to neighbors.
pub fn classify_lines_excluding(
    lines: &[TextLine],
    th: &PageThresholds,
    excluded: &[bool],
) -> Vec<LineClass> {
    debug_assert_eq!(lines.len(), excluded.len());
    let ws_of = |i: isize| -> f64 {
        if i < 0 || i as usize >= lines.len() || excluded[i as usize] {
            0.0
        } else {
            lines[i as usize].max_word_space() as f64
        }
    };
    lines
        .iter()
        .enumerate()
        .map(|(x, line)| {
            if excluded[x] {
                return LineClass::Text;
            }
            let height = line.height() as f64;
            let gaps = line.gap_count();
            let ws = line.max_word_space() as f64;
            if height >= 3.0 * th.lh && gaps == 0 {
                LineClass::TypeABlock
            } else if ws > th.ws && height <= th.lh {
                LineClass::ColumnarCandidate
            } else if gaps == 0
                && height < th.lh
                && (ws_of(x as isize - 1) > th.ws || ws_of(x as isize + 1) > th.ws)
            {
                LineClass::RuleLine
            } else {
                LineClass::Text
            }
        })
        .collect()
}

struct OpenRun {
    members: Vec<usize>,
    non_text: usize,
    rules: usize,
}

/// Merges classified lines into table regions.
///
/// Every tall zero-gap block is its own category-A region. Maximal runs of
/// columnar and rule lines, tolerating up to `max_interior_text_lines`
/// consecutive text lines strictly inside, form one region each; runs with
/// fewer than `min_table_lines` non-text members are dropped. A run with at
/// least two rule lines is category B, otherwise C.
pub fn merge_regions(
    classes: &[LineClass],
    lines: &[TextLine],
    cfg: &DetectorConfig,
) -> Vec<TableRegion> {
    debug_assert_eq!(classes.len(), lines.len());
    let mut regions = Vec::new();
    let mut run: Option<OpenRun> = None;
    let mut pending_text: Vec<usize> = Vec::new();

    let close = |run: &mut Option<OpenRun>, pending: &mut Vec<usize>, out: &mut Vec<TableRegion>| {
        pending.clear();
        if let Some(r) = run.take() {
            if r.non_text >= cfg.min_table_lines {
                let category = if r.rules >= 2 { Category::B } else { Category::C };
                out.push(region_from_members(&r.members, lines, r.rules, category));
            }
        }
    };

    for (i, &class) in classes.iter().enumerate() {
        match class {
            LineClass::TypeABlock => {
                close(&mut run, &mut pending_text, &mut regions);
                regions.push(region_from_members(&[i], lines, 0, Category::A));
            }
            LineClass::ColumnarCandidate | LineClass::RuleLine => {
                if pending_text.len() > cfg.max_interior_text_lines {
                    close(&mut run, &mut pending_text, &mut regions);
                }
                let r = run.get_or_insert_with(|| OpenRun {
                    members: Vec::new(),
                    non_text: 0,
                    rules: 0,
                });
                r.members.append(&mut pending_text);
                r.members.push(i);
                r.non_text += 1;
                if class == LineClass::RuleLine {
                    r.rules += 1;
                }
            }
            LineClass::Text => {
                if run.is_some() {
                    pending_text.push(i);
                }
            }
        }
    }
    close(&mut run, &mut pending_text, &mut regions);
    regions
}

fn region_from_members(
    members: &[usize],
    lines: &[TextLine],
    rules: usize,
    category: Category,
) -> TableRegion {
    let first = &lines[members[0]];
    let last = &lines[*members.last().unwrap()];
    let x0 = members.iter().map(|&i| lines[i].x_first_ink).min().unwrap();
    let x1 = members.iter().map(|&i| lines[i].x_last_ink).max().unwrap();
    TableRegion {
        rect: Rect::new(x0, first.y_top, x1 - x0 + 1, last.y_bottom - first.y_top + 1),
        category,
        line_indices: members.to_vec(),
        rule_line_count: rules,
    }
}

/// Runs the full pipeline on one grayscale page.
///
/// Preprocessing, profiling, thresholding, classification and merging in
/// sequence. A page without any gapped line yields an empty-region report
/// carrying the [`DIAG_NO_TEXT_LINE`] diagnostic instead of an error.
pub fn detect(gray: &GrayImage, page_id: &str, cfg: &RunConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let bin = binarize_adaptive(gray, &cfg.preprocess);
    let cleaned = remove_border_noise(&bin, &cfg.preprocess);
    let dilated = dilate(&cleaned, &cfg.preprocess);
    let lines = build_page(&dilated, &cfg.profile)?;

    let (thresholds, classes, regions, diagnostic) =
        match compute_thresholds(&lines, cfg.alpha_ws, cfg.alpha_lh) {
            Ok(th) => {
                let excluded = exclusion_mask(&lines, gray.height(), &cfg.detector);
                let classes = classify_lines_excluding(&lines, &th, &excluded);
                let regions = merge_regions(&classes, &lines, &cfg.detector);
                (Some(th), classes, regions, None)
            }
            Err(Error::NoTextLine) => (
                None,
                vec![LineClass::Text; lines.len()],
                Vec::new(),
                Some(DIAG_NO_TEXT_LINE.to_string()),
            ),
            Err(e) => return Err(e),
        };

    let line_records = lines
        .iter()
        .zip(&classes)
        .map(|(line, &class)| LineRecord {
            index: line.index,
            y_top: line.y_top,
            y_bottom: line.y_bottom,
            height: line.height(),
            gap_count: line.gap_count(),
            max_word_space: line.max_word_space(),
            class,
        })
        .collect();

    Ok(DetectionReport {
        schema: REPORT_SCHEMA,
        page_id: page_id.to_string(),
        page_size: (gray.width(), gray.height()),
        diagnostic,
        thresholds,
        lines: line_records,
        regions,
        config_fingerprint: cfg.fingerprint(),
    })
}

/// Marks lines living entirely inside the excluded top/bottom page strips.
fn exclusion_mask(lines: &[TextLine], page_height: u32, cfg: &DetectorConfig) -> Vec<bool> {
    let frac = cfg.header_footer_exclusion_frac;
    if frac <= 0.0 {
        return vec![false; lines.len()];
    }
    let strip = frac * page_height as f64;
    lines
        .iter()
        .map(|line| {
            ((line.y_bottom + 1) as f64) <= strip || (line.y_top as f64) >= page_height as f64 - strip
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Gap;

    /// Builds a line stub with the given height, gap count and widest gap.
    fn line(index: usize, height: u32, gap_count: usize, widest: u32) -> TextLine {
        assert!(gap_count > 0 || widest == 0);
        let mut gaps = Vec::new();
        let mut x = 10;
        for i in 0..gap_count {
            let width = if i == 0 { widest } else { 2.min(widest) };
            gaps.push(Gap { x_start: x, width });
            x += width + 15;
        }
        TextLine {
            index,
            y_top: 100 * index as u32,
            y_bottom: 100 * index as u32 + height - 1,
            gaps,
            x_first_ink: 5,
            x_last_ink: 200,
        }
    }

    fn thresholds() -> PageThresholds {
        PageThresholds {
            standard_line_index: 0,
            ws_std: 10,
            lh_std: 12,
            ws: 15.0,
            lh: 15.0,
            alpha_ws: 1.5,
            alpha_lh: 1.25,
        }
    }

    #[test]
    fn tall_gapless_block_is_type_a() {
        // 3.2 * lh = 48, zero gaps
        let lines = vec![line(0, 48, 0, 0)];
        assert_eq!(classify_lines(&lines, &thresholds()), vec![LineClass::TypeABlock]);
    }

    #[test]
    fn wide_space_normal_height_is_columnar() {
        // ws = 1.2 * threshold, height = 0.9 * lh
        let lines = vec![line(0, 13, 2, 18)];
        assert_eq!(
            classify_lines(&lines, &thresholds()),
            vec![LineClass::ColumnarCandidate]
        );
    }

    #[test]
    fn thin_gapless_line_needs_a_columnar_neighbor() {
        let with_neighbor = vec![line(0, 3, 0, 0), line(1, 13, 2, 18)];
        assert_eq!(
            classify_lines(&with_neighbor, &thresholds()),
            vec![LineClass::RuleLine, LineClass::ColumnarCandidate]
        );
        let alone = vec![line(0, 3, 0, 0), line(1, 13, 2, 9)];
        assert_eq!(
            classify_lines(&alone, &thresholds()),
            vec![LineClass::Text, LineClass::Text]
        );
    }

    #[test]
    fn rule_line_sees_previous_neighbor_too() {
        let lines = vec![line(0, 13, 2, 18), line(1, 3, 0, 0)];
        let classes = classify_lines(&lines, &thresholds());
        assert_eq!(classes[1], LineClass::RuleLine);
    }

    #[test]
    fn branch_priority_prefers_type_a() {
        // tall AND gapless: branch 1 wins even though branch 3 could apply
        let lines = vec![line(0, 50, 0, 0), line(1, 13, 2, 18)];
        let classes = classify_lines(&lines, &thresholds());
        assert_eq!(classes[0], LineClass::TypeABlock);
    }

    #[test]
    fn boundary_comparisons_are_strict_where_specified() {
        let th = thresholds();
        // WS exactly ws is NOT columnar (strict >)
        let lines = vec![line(0, 13, 1, 15)];
        assert_eq!(classify_lines(&lines, &th), vec![LineClass::Text]);
        // height exactly lh IS allowed for columnar (≤)
        let lines = vec![line(0, 15, 1, 16)];
        assert_eq!(classify_lines(&lines, &th), vec![LineClass::ColumnarCandidate]);
        // height exactly 3*lh qualifies for type A (≥)
        let lines = vec![line(0, 45, 0, 0)];
        assert_eq!(classify_lines(&lines, &th), vec![LineClass::TypeABlock]);
    }

    #[test]
    fn excluded_lines_are_text_and_invisible_to_neighbors() {
        let lines = vec![line(0, 13, 2, 18), line(1, 3, 0, 0)];
        let classes = classify_lines_excluding(&lines, &thresholds(), &[true, false]);
        assert_eq!(classes, vec![LineClass::Text, LineClass::Text]);
    }

    fn classes_of(s: &str) -> Vec<LineClass> {
        s.chars()
            .map(|c| match c {
                'T' => LineClass::Text,
                'A' => LineClass::TypeABlock,
                'C' => LineClass::ColumnarCandidate,
                'R' => LineClass::RuleLine,
                _ => panic!("bad class char {c}"),
            })
            .collect()
    }

    fn merge_str(s: &str, cfg: &DetectorConfig) -> Vec<TableRegion> {
        let classes = classes_of(s);
        let lines: Vec<TextLine> = classes
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                LineClass::TypeABlock => line(i, 60, 0, 0),
                LineClass::RuleLine => line(i, 3, 0, 0),
                _ => line(i, 12, 2, if c == LineClass::ColumnarCandidate { 18 } else { 8 }),
            })
            .collect();
        merge_regions(&classes, &lines, cfg)
    }

    #[test]
    fn columnar_run_becomes_one_type_c_region() {
        let regions = merge_str("TTCCCTT", &DetectorConfig::default());
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].category, Category::C);
        assert_eq!(regions[0].line_indices, vec![2, 3, 4]);
        assert_eq!(regions[0].rule_line_count, 0);
    }

    #[test]
    fn rule_framed_run_becomes_type_b() {
        let regions = merge_str("TRCCCRT", &DetectorConfig::default());
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].category, Category::B);
        assert_eq!(regions[0].rule_line_count, 2);
        assert_eq!(regions[0].line_indices, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn short_runs_are_discarded() {
        assert!(merge_str("TCCT", &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn interior_text_line_is_tolerated() {
        let regions = merge_str("TCCTCCT", &DetectorConfig::default());
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].line_indices, vec![1, 2, 3, 4, 5]);
        assert_eq!(regions[0].category, Category::C);
    }

    #[test]
    fn two_interior_text_lines_split_the_run() {
        let regions = merge_str("CCCTTCCC", &DetectorConfig::default());
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].line_indices, vec![0, 1, 2]);
        assert_eq!(regions[1].line_indices, vec![5, 6, 7]);
    }

    #[test]
    fn zero_tolerance_splits_on_any_text() {
        let cfg = DetectorConfig { max_interior_text_lines: 0, ..DetectorConfig::default() };
        let regions = merge_str("CCCTCCC", &cfg);
        assert_eq!(regions.len(), 2);
    }

    #[test]
    fn trailing_text_is_not_included() {
        let regions = merge_str("CCCT", &DetectorConfig::default());
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].line_indices, vec![0, 1, 2]);
    }

    #[test]
    fn each_type_a_block_stands_alone() {
        let regions = merge_str("TATAT", &DetectorConfig::default());
        assert_eq!(regions.len(), 2);
        assert!(regions.iter().all(|r| r.category == Category::A));
        assert!(regions.iter().all(|r| r.line_indices.len() == 1));
    }

    #[test]
    fn type_a_block_interrupts_a_run() {
        // the A line breaks the two C lines off from the later pair
        let regions = merge_str("CCACC", &DetectorConfig::default());
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].category, Category::A);
    }

    #[test]
    fn region_rect_spans_members() {
        let regions = merge_str("TCCC", &DetectorConfig::default());
        let r = &regions[0];
        assert_eq!(r.rect.y, 100);
        assert_eq!(r.rect.bottom(), 3 * 100 + 12);
        assert_eq!(r.rect.x, 5);
        assert_eq!(r.rect.right(), 201);
    }

    #[test]
    fn regions_never_overlap_vertically() {
        for pattern in ["CCCRCCCACCC", "ARCRCRA", "CCCTCCCTTCCC"] {
            let regions = merge_str(pattern, &DetectorConfig::default());
            for pair in regions.windows(2) {
                assert!(
                    pair[0].rect.bottom() <= pair[1].rect.y,
                    "{pattern}: regions overlap"
                );
            }
        }
    }
}
