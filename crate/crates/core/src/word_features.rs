//! Baseline, line of maximum transitions (LMT) and potential cut regions.
//!
//! Baseline and LMT are estimated once per text line and shared by every
//! word of that line; word crops keep the full line height so the row
//! indices carry over unchanged.

use std::path::Path;

use image::{Rgb, RgbImage};
use serde::Serialize;

use crate::error::{OcrError, Result};
use crate::page_layout::{project, Axis};
use crate::raster::BinaryImage;

/// A background run on the LMT bounded by ink on both sides.
///
/// `start` is the rightmost background column and `end` the leftmost, so
/// `start >= end` in raster coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Pcr {
    pub start: usize,
    pub end: usize,
    /// Position in right-to-left order.
    pub order: usize,
}

impl Pcr {
    pub fn middle(&self) -> usize {
        (self.start + self.end) / 2
    }

    pub fn width(&self) -> usize {
        self.start - self.end + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Lmt {
    pub row: usize,
    pub transitions: usize,
}

impl Lmt {
    /// No row above the baseline crosses any ink.
    pub fn is_degenerate(&self) -> bool {
        self.transitions == 0
    }
}

/// Line-level rows shared by all words of a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LineMetrics {
    pub baseline_row: usize,
    pub lmt_row: usize,
    /// Rows from the topmost ink row of the line down to the baseline.
    pub ascender: usize,
    /// Thickness of the baseline stroke, see [`baseline_pen`].
    pub pen: Pen,
}

/// Typical extent of the connecting stroke around the baseline row: rows
/// of ink directly above and below it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Pen {
    pub above: usize,
    pub below: usize,
}

impl Pen {
    pub fn thickness(&self) -> usize {
        self.above + self.below + 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WordFeatures {
    pub baseline_row: usize,
    pub lmt_row: usize,
    pub ascender: usize,
    pub pen: Pen,
    pub pcrs: Vec<Pcr>,
}

/// Row with the most ink; ties go to the lower row.
pub fn find_baseline(line: &BinaryImage) -> Result<usize> {
    let rows = project(line, Axis::Horizontal).values;
    let (row, &count) = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| OcrError::invalid("empty line raster"))?;
    if count == 0 {
        return Err(OcrError::invalid("line holds no ink"));
    }
    Ok(row)
}

fn transitions(row: &[u8]) -> usize {
    row.windows(2).filter(|p| p[0] != p[1]).count()
}

/// Row above the baseline with the most 0/1 changes; ties go to the row
/// nearest the baseline.
pub fn find_lmt(line: &BinaryImage, baseline: usize) -> Result<Lmt> {
    find_lmt_above(line, baseline, 0)
}

/// [`find_lmt`] restricted to rows at least `margin + 1` above the
/// baseline. Thick rendered baselines put letter feet on the row right
/// above the baseline, where they add transitions that belong to no cut.
/// Falls back to the unrestricted search when the margin leaves no row.
pub fn find_lmt_above(line: &BinaryImage, baseline: usize, margin: usize) -> Result<Lmt> {
    if baseline == 0 || baseline >= line.height() {
        return Err(OcrError::invalid(format!(
            "no row above baseline {baseline} in a {}-row raster",
            line.height()
        )));
    }
    let first = if baseline > margin + 1 { baseline - 1 - margin } else { baseline - 1 };
    let mut best = Lmt {
        row: first,
        transitions: transitions(line.row(first)),
    };
    for row in (0..first).rev() {
        let t = transitions(line.row(row));
        if t > best.transitions {
            best = Lmt { row, transitions: t };
        }
    }
    if best.is_degenerate() {
        log::warn!("degenerate LMT: no transitions above baseline row {baseline}");
    }
    Ok(best)
}

/// Median vertical ink run through the baseline row, split into the part
/// above and below it. Letter bodies make some runs long, but connecting
/// strokes dominate the median on real text.
pub fn baseline_pen(line: &BinaryImage, baseline: usize) -> Pen {
    let h = line.height();
    let mut above = Vec::new();
    let mut below = Vec::new();
    for x in 0..line.width() {
        if !line.get(x, baseline) {
            continue;
        }
        above.push((0..baseline).rev().take_while(|&y| line.get(x, y)).count());
        below.push((baseline + 1..h).take_while(|&y| line.get(x, y)).count());
    }
    if above.is_empty() {
        return Pen::default();
    }
    let median = |v: &mut Vec<usize>| {
        v.sort_unstable();
        v[v.len() / 2]
    };
    Pen {
        above: median(&mut above),
        below: median(&mut below),
    }
}

pub fn line_metrics(line: &BinaryImage) -> Result<LineMetrics> {
    line_metrics_with(line, 0)
}

/// Line metrics with the LMT kept clear of the baseline stroke: at least
/// `lmt_margin` rows, or the stroke's measured upper extent if larger.
pub fn line_metrics_with(line: &BinaryImage, lmt_margin: usize) -> Result<LineMetrics> {
    let baseline_row = find_baseline(line)?;
    let pen = baseline_pen(line, baseline_row);
    let lmt = find_lmt_above(line, baseline_row, lmt_margin.max(pen.above))?;
    let top = line
        .ink_bounds()
        .map(|(_, t, _, _)| t)
        .unwrap_or(baseline_row);
    Ok(LineMetrics {
        baseline_row,
        lmt_row: lmt.row,
        ascender: baseline_row.saturating_sub(top),
        pen,
    })
}

/// Walks the LMT row from right to left collecting background runs that
/// are closed by ink on both sides. A trailing open run is dropped.
pub fn extract_pcrs(word: &BinaryImage, lmt_row: usize) -> Vec<Pcr> {
    if lmt_row >= word.height() || word.width() < 2 {
        return Vec::new();
    }
    let row = word.row(lmt_row);
    let mut pcrs = Vec::new();
    let mut open: Option<usize> = None;
    for x in (0..word.width() - 1).rev() {
        let (here, left) = (row[x + 1] == 1, row[x] == 1);
        if here && !left {
            open = Some(x);
        } else if !here && left {
            if let Some(start) = open.take() {
                pcrs.push(Pcr {
                    start,
                    end: x + 1,
                    order: pcrs.len(),
                });
            }
        }
    }
    pcrs
}

pub fn word_features(word: &BinaryImage, line: &LineMetrics) -> WordFeatures {
    WordFeatures {
        baseline_row: line.baseline_row,
        lmt_row: line.lmt_row,
        ascender: line.ascender,
        pen: line.pen,
        pcrs: extract_pcrs(word, line.lmt_row),
    }
}

/// Renders the word with the baseline in red, the LMT in green, PCR starts
/// in dark blue and PCR ends in light blue.
pub fn feature_overlay(word: &BinaryImage, f: &WordFeatures) -> RgbImage {
    let (w, h) = (word.width() as u32, word.height() as u32);
    let mut img = RgbImage::from_fn(w, h, |x, y| {
        if word.get(x as usize, y as usize) {
            Rgb([0, 0, 0])
        } else {
            Rgb([255, 255, 255])
        }
    });
    for x in 0..w {
        if (f.baseline_row as u32) < h {
            img.put_pixel(x, f.baseline_row as u32, Rgb([220, 0, 0]));
        }
        if (f.lmt_row as u32) < h {
            img.put_pixel(x, f.lmt_row as u32, Rgb([0, 180, 0]));
        }
    }
    for p in &f.pcrs {
        for y in 0..h {
            img.put_pixel(p.start as u32, y, Rgb([0, 0, 139]));
            img.put_pixel(p.end as u32, y, Rgb([100, 180, 255]));
        }
    }
    img
}

pub fn save_feature_overlay(word: &BinaryImage, f: &WordFeatures, path: &Path) -> Result<()> {
    feature_overlay(word, f)
        .save(path)
        .map_err(|source| OcrError::Image {
            path: path.to_path_buf(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_single_row() {
        let mut img = BinaryImage::blank(6, 8);
        for x in 0..6 {
            img.set(x, 5, true);
        }
        assert_eq!(find_baseline(&img).unwrap(), 5);
    }

    #[test]
    fn baseline_tie_prefers_lower_row() {
        let mut img = BinaryImage::blank(6, 9);
        for x in 1..4 {
            img.set(x, 3, true);
            img.set(x, 7, true);
        }
        assert_eq!(find_baseline(&img).unwrap(), 7);
    }

    #[test]
    fn baseline_needs_ink() {
        assert!(find_baseline(&BinaryImage::blank(3, 3)).is_err());
    }

    #[test]
    fn lmt_counts_transitions() {
        let img = BinaryImage::from_ascii(
            "
            .##.
            .#.#
            ####
            ",
        )
        .unwrap();
        let lmt = find_lmt(&img, 2).unwrap();
        assert_eq!(lmt, Lmt { row: 1, transitions: 3 });
    }

    #[test]
    fn lmt_tie_prefers_row_near_baseline() {
        let img = BinaryImage::from_ascii(
            "
            .#..
            .#..
            ####
            ",
        )
        .unwrap();
        assert_eq!(find_lmt(&img, 2).unwrap().row, 1);
    }

    #[test]
    fn lmt_blank_rows_are_degenerate() {
        let img = BinaryImage::from_ascii("....\n....\n####").unwrap();
        let lmt = find_lmt(&img, 2).unwrap();
        assert_eq!(lmt.row, 1);
        assert!(lmt.is_degenerate());
        assert!(find_lmt(&img, 0).is_err());
    }

    #[test]
    fn pcr_trace() {
        // Columns left to right: I B B I I; reading right to left: I I B B I.
        let img = BinaryImage::from_ascii("#..##").unwrap();
        let pcrs = extract_pcrs(&img, 0);
        assert_eq!(pcrs, vec![Pcr { start: 2, end: 1, order: 0 }]);
        assert_eq!(pcrs[0].width(), 2);
    }

    #[test]
    fn pcr_full_ink_and_open_runs() {
        assert!(extract_pcrs(&BinaryImage::from_ascii("#####").unwrap(), 0).is_empty());
        // leading and trailing background never forms a region
        let pcrs = extract_pcrs(&BinaryImage::from_ascii("..#.#..#..").unwrap(), 0);
        assert_eq!(
            pcrs,
            vec![
                Pcr { start: 6, end: 5, order: 0 },
                Pcr { start: 3, end: 3, order: 1 },
            ]
        );
    }

    proptest::proptest! {
        #[test]
        fn pcrs_are_disjoint_background_runs(bits in proptest::collection::vec(0u8..2, 2..40)) {
            let img = BinaryImage::new(bits.len(), 1, bits.clone()).unwrap();
            let pcrs = extract_pcrs(&img, 0);
            for (i, p) in pcrs.iter().enumerate() {
                proptest::prop_assert_eq!(p.order, i);
                proptest::prop_assert!(p.start >= p.end);
                proptest::prop_assert!((p.end..=p.start).all(|x| bits[x] == 0));
                proptest::prop_assert_eq!(bits[p.start + 1], 1);
                proptest::prop_assert_eq!(bits[p.end - 1], 1);
                if i > 0 {
                    proptest::prop_assert!(pcrs[i - 1].end > p.start);
                }
            }
        }

        #[test]
        fn baseline_is_argmax(bits in proptest::collection::vec(0u8..2, 30..31)) {
            let img = BinaryImage::new(5, 6, bits).unwrap();
            if img.ink_count() > 0 {
                let b = find_baseline(&img).unwrap();
                let rows = project(&img, Axis::Horizontal).values;
                proptest::prop_assert!(rows.iter().all(|&r| r <= rows[b]));
            }
        }
    }
}
