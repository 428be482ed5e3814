//! Detection scoring: greedy IoU matching per page and corpus aggregation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detector::TableRegion;
use crate::error::{Error, Result};
use crate::raster::Rect;
use crate::Category;

pub const TRUTH_SCHEMA: u32 = 1;
pub const SUMMARY_SCHEMA: u32 = 1;

/// Ground-truth tables of one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema: u32,
    pub page_id: String,
    pub entries: Vec<TruthEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    #[serde(flatten)]
    pub rect: Rect,
    pub category: Category,
}

impl GroundTruth {
    pub fn new(page_id: impl Into<String>, entries: Vec<TruthEntry>) -> Self {
        GroundTruth {
            schema: TRUTH_SCHEMA,
            page_id: page_id.into(),
            entries,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("truth serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("bad truth: {e}")))
    }
}

/// Intersection area over union area; 1 for identical rects, 0 when disjoint.
pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    /// Index into the detected region list.
    pub detected: usize,
    /// Index into the truth entry list.
    pub truth: usize,
    pub iou: f64,
    /// Whether the detected category equals the truth category.
    pub category_agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_detected: Vec<usize>,
    pub unmatched_truth: Vec<usize>,
}

/// Greedily pairs detections with truth entries in descending IoU order.
///
/// Only pairs reaching `iou_min` are considered, so every matched truth
/// entry counts as correctly located. Category agreement is reported but
/// does not influence the matching.
pub fn match_regions(
    detected: &[TableRegion],
    truth: &GroundTruth,
    iou_min: f64,
) -> Result<MatchOutcome> {
    if !(iou_min > 0.0 && iou_min <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "iou_min must lie in (0, 1], got {iou_min}"
        )));
    }
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (d, region) in detected.iter().enumerate() {
        for (t, entry) in truth.entries.iter().enumerate() {
            let overlap = iou(&region.rect, &entry.rect);
            if overlap >= iou_min {
                candidates.push((d, t, overlap));
            }
        }
    }
    // descending IoU; ties resolved by truth then detection ordinal so the
    // outcome never depends on container iteration order
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));

    let mut detected_used = vec![false; detected.len()];
    let mut truth_used = vec![false; truth.entries.len()];
    let mut pairs = Vec::new();
    for (d, t, overlap) in candidates {
        if detected_used[d] || truth_used[t] {
            continue;
        }
        detected_used[d] = true;
        truth_used[t] = true;
        pairs.push(MatchedPair {
            detected: d,
            truth: t,
            iou: overlap,
            category_agrees: detected[d].category == truth.entries[t].category,
        });
    }
    Ok(MatchOutcome {
        pairs,
        unmatched_detected: (0..detected.len()).filter(|&d| !detected_used[d]).collect(),
        unmatched_truth: (0..truth.entries.len()).filter(|&t| !truth_used[t]).collect(),
    })
}

/// Per-page outcome folded into corpus aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct PageEval {
    pub page_id: String,
    /// One flag pair per truth entry: its category, whether it was located,
    /// and whether the located region also carried the right category.
    pub entries: Vec<(Category, bool, bool)>,
    /// Detected regions with no truth partner.
    pub false_positives: u32,
}

/// Scores one page's detections against its truth.
pub fn evaluate_page(
    page_id: &str,
    detected: &[TableRegion],
    truth: &GroundTruth,
    iou_min: f64,
) -> Result<PageEval> {
    let outcome = match_regions(detected, truth, iou_min)?;
    let mut entries: Vec<(Category, bool, bool)> = truth
        .entries
        .iter()
        .map(|e| (e.category, false, false))
        .collect();
    for pair in &outcome.pairs {
        entries[pair.truth].1 = true;
        entries[pair.truth].2 = pair.category_agrees;
    }
    Ok(PageEval {
        page_id: page_id.to_string(),
        entries,
        false_positives: outcome.unmatched_detected.len() as u32,
    })
}

/// Percentage with one decimal, kept exact in tenths and serialized as a
/// string like `"82.7"` so summaries stay byte-stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pct(u32);

impl Pct {
    /// `100 * correct / total`, rounded half-up to one decimal.
    pub fn from_counts(correct: u32, total: u32) -> Pct {
        if total == 0 {
            return Pct(0);
        }
        let tenths = (1000 * correct as u64 + total as u64 / 2) / total as u64;
        Pct(tenths as u32)
    }

    pub fn tenths(&self) -> u32 {
        self.0
    }
}

impl fmt::Display for Pct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

impl Serialize for Pct {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Pct {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        let (whole, frac) = text
            .split_once('.')
            .ok_or_else(|| serde::de::Error::custom("percentage must look like \"82.7\""))?;
        if frac.len() != 1 {
            return Err(serde::de::Error::custom("percentage must have one decimal"));
        }
        let whole: u32 = whole.parse().map_err(serde::de::Error::custom)?;
        let frac: u32 = frac.parse().map_err(serde::de::Error::custom)?;
        Ok(Pct(whole * 10 + frac))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryStat {
    pub total: u32,
    pub correct: u32,
    pub accuracy_pct: Pct,
}

impl CategoryStat {
    fn from_counts(total: u32, correct: u32) -> Self {
        CategoryStat {
            total,
            correct,
            accuracy_pct: Pct::from_counts(correct, total),
        }
    }
}

/// Corpus-level accuracy report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub schema: u32,
    pub iou_min: f64,
    pub pages: u32,
    /// Stats per category present in the truth, keyed "A"/"B"/"C".
    pub per_category: BTreeMap<Category, CategoryStat>,
    pub overall: CategoryStat,
    /// Located truth entries whose detected category disagreed.
    pub category_mismatches: u32,
    /// Detected regions that matched no truth entry.
    pub false_positives: u32,
    /// Per-page evaluation problems, e.g. missing truth files.
    pub errors: Vec<String>,
}

impl EvalSummary {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("bad summary: {e}")))
    }

    /// Builds a summary from per-category (total, correct) counts, for
    /// fixtures and sanity checks.
    pub fn from_category_counts(counts: &[(Category, u32, u32)], iou_min: f64, pages: u32) -> Self {
        let mut per_category = BTreeMap::new();
        let mut total = 0;
        let mut correct = 0;
        for &(category, t, c) in counts {
            per_category.insert(category, CategoryStat::from_counts(t, c));
            total += t;
            correct += c;
        }
        EvalSummary {
            schema: SUMMARY_SCHEMA,
            iou_min,
            pages,
            per_category,
            overall: CategoryStat::from_counts(total, correct),
            category_mismatches: 0,
            false_positives: 0,
            errors: Vec::new(),
        }
    }

    /// Plain-text table for terminal output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("category  total  correct  accuracy\n");
        for (category, stat) in &self.per_category {
            out.push_str(&format!(
                "{:<8}  {:>5}  {:>7}  {:>7}%\n",
                category.to_string(),
                stat.total,
                stat.correct,
                stat.accuracy_pct
            ));
        }
        out.push_str(&format!(
            "{:<8}  {:>5}  {:>7}  {:>7}%\n",
            "overall", self.overall.total, self.overall.correct, self.overall.accuracy_pct
        ));
        out
    }
}

/// Folds per-page results into a corpus summary.
pub fn aggregate(pages: &[PageEval], iou_min: f64, errors: Vec<String>) -> Result<EvalSummary> {
    if pages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut totals: BTreeMap<Category, (u32, u32)> = BTreeMap::new();
    let mut mismatches = 0;
    let mut false_positives = 0;
    for page in pages {
        false_positives += page.false_positives;
        for &(category, located, agrees) in &page.entries {
            let slot = totals.entry(category).or_insert((0, 0));
            slot.0 += 1;
            if located {
                slot.1 += 1;
                if !agrees {
                    mismatches += 1;
                }
            }
        }
    }
    let counts: Vec<(Category, u32, u32)> = totals
        .into_iter()
        .map(|(cat, (t, c))| (cat, t, c))
        .collect();
    let mut summary = EvalSummary::from_category_counts(&counts, iou_min, pages.len() as u32);
    summary.category_mismatches = mismatches;
    summary.false_positives = false_positives;
    summary.errors = errors;
    Ok(summary)
}

/// Built-in reference fixtures usable without report/truth files.
pub fn builtin_fixture(name: &str) -> Option<EvalSummary> {
    match name {
        "table1" => Some(EvalSummary::from_category_counts(
            &[
                (Category::A, 110, 91),
                (Category::B, 135, 91),
                (Category::C, 53, 40),
            ],
            0.5,
            298,
        )),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(x: u32, y: u32, w: u32, h: u32, category: Category) -> TableRegion {
        TableRegion {
            rect: Rect::new(x, y, w, h),
            category,
            line_indices: vec![0],
            rule_line_count: 0,
        }
    }

    fn entry(x: u32, y: u32, w: u32, h: u32, category: Category) -> TruthEntry {
        TruthEntry { rect: Rect::new(x, y, w, h), category }
    }

    #[test]
    fn iou_is_one_for_identical_rects() {
        let r = Rect::new(3, 5, 20, 10);
        assert_eq!(iou(&r, &r), 1.0);
    }

    #[test]
    fn iou_is_zero_for_disjoint_rects() {
        assert_eq!(iou(&Rect::new(0, 0, 5, 5), &Rect::new(10, 10, 5, 5)), 0.0);
    }

    #[test]
    fn iou_is_symmetric() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(5, 5, 10, 10);
        assert_eq!(iou(&a, &b), iou(&b, &a));
        assert!((iou(&a, &b) - 25.0 / 175.0).abs() < 1e-12);
    }

    #[test]
    fn half_covered_truth_matches_at_exactly_half() {
        // detection covers exactly half the truth area, fully inside it
        let truth = GroundTruth::new("p", vec![entry(0, 0, 4, 4, Category::C)]);
        let det = [region(0, 0, 4, 2, Category::C)];
        let outcome = match_regions(&det, &truth, 0.5).unwrap();
        assert_eq!(outcome.pairs.len(), 1);
        assert_eq!(outcome.pairs[0].iou, 0.5);
    }

    #[test]
    fn sub_threshold_overlap_does_not_match() {
        let truth = GroundTruth::new("p", vec![entry(0, 0, 10, 10, Category::C)]);
        let det = [region(8, 8, 10, 10, Category::C)];
        let outcome = match_regions(&det, &truth, 0.5).unwrap();
        assert!(outcome.pairs.is_empty());
        assert_eq!(outcome.unmatched_detected, vec![0]);
        assert_eq!(outcome.unmatched_truth, vec![0]);
    }

    #[test]
    fn greedy_matching_prefers_higher_iou_and_never_reuses() {
        let truth = GroundTruth::new(
            "p",
            vec![entry(0, 0, 10, 10, Category::C), entry(0, 12, 10, 10, Category::C)],
        );
        // detection 0 overlaps truth 0 perfectly; detection 1 overlaps both
        // truths weakly and must take the leftover one
        let det = [
            region(0, 0, 10, 10, Category::C),
            region(0, 6, 10, 10, Category::C),
        ];
        let outcome = match_regions(&det, &truth, 0.2).unwrap();
        assert_eq!(outcome.pairs.len(), 2);
        let by_truth: BTreeMap<usize, usize> =
            outcome.pairs.iter().map(|p| (p.truth, p.detected)).collect();
        assert_eq!(by_truth[&0], 0);
        assert_eq!(by_truth[&1], 1);
    }

    #[test]
    fn matching_is_category_agnostic_but_reports_agreement() {
        let truth = GroundTruth::new("p", vec![entry(0, 0, 10, 10, Category::B)]);
        let det = [region(0, 0, 10, 10, Category::C)];
        let outcome = match_regions(&det, &truth, 0.5).unwrap();
        assert_eq!(outcome.pairs.len(), 1);
        assert!(!outcome.pairs[0].category_agrees);
    }

    #[test]
    fn bad_iou_min_is_rejected() {
        let truth = GroundTruth::new("p", vec![]);
        assert!(match_regions(&[], &truth, 0.0).is_err());
        assert!(match_regions(&[], &truth, 1.5).is_err());
    }

    #[test]
    fn percentage_rounds_half_up_to_one_decimal() {
        assert_eq!(Pct::from_counts(91, 110).to_string(), "82.7");
        assert_eq!(Pct::from_counts(91, 135).to_string(), "67.4");
        assert_eq!(Pct::from_counts(40, 53).to_string(), "75.5");
        assert_eq!(Pct::from_counts(222, 298).to_string(), "74.5");
        assert_eq!(Pct::from_counts(1, 1).to_string(), "100.0");
        assert_eq!(Pct::from_counts(1, 16).to_string(), "6.3");
    }

    #[test]
    fn reference_fixture_reproduces_published_accuracies() {
        let summary = builtin_fixture("table1").unwrap();
        assert_eq!(summary.per_category[&Category::A].accuracy_pct.to_string(), "82.7");
        assert_eq!(summary.per_category[&Category::B].accuracy_pct.to_string(), "67.4");
        assert_eq!(summary.per_category[&Category::C].accuracy_pct.to_string(), "75.5");
        assert_eq!(summary.overall.accuracy_pct.to_string(), "74.5");
        assert_eq!(summary.overall.total, 298);
        assert_eq!(summary.overall.correct, 222);
        assert!(builtin_fixture("unknown").is_none());
    }

    #[test]
    fn aggregate_counts_per_category() {
        let pages = vec![
            PageEval {
                page_id: "p0".into(),
                entries: vec![(Category::A, true, true), (Category::B, false, false)],
                false_positives: 1,
            },
            PageEval {
                page_id: "p1".into(),
                entries: vec![(Category::B, true, false)],
                false_positives: 0,
            },
        ];
        let summary = aggregate(&pages, 0.5, vec![]).unwrap();
        assert_eq!(summary.pages, 2);
        assert_eq!(summary.per_category[&Category::A].correct, 1);
        assert_eq!(summary.per_category[&Category::B].total, 2);
        assert_eq!(summary.per_category[&Category::B].correct, 1);
        assert_eq!(summary.category_mismatches, 1);
        assert_eq!(summary.false_positives, 1);
        assert!(!summary.per_category.contains_key(&Category::C));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(aggregate(&[], 0.5, vec![]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn summary_round_trips_through_json() {
        let summary = builtin_fixture("table1").unwrap();
        let text = summary.to_json_pretty();
        assert!(text.contains("\"82.7\""), "percentages serialize as strings");
        let back = EvalSummary::from_json(&text).unwrap();
        assert_eq!(back, summary);
    }

    #[test]
    fn truth_round_trips_with_flat_rect_fields() {
        let truth = GroundTruth::new("p7", vec![entry(4, 8, 100, 60, Category::B)]);
        let text = truth.to_json_pretty();
        assert!(text.contains("\"x\": 4"));
        assert!(text.contains("\"category\": \"B\""));
        assert_eq!(GroundTruth::from_json(&text).unwrap(), truth);
    }
}
