//! Line segmentation from the blurred horizontal projection and word
//! segmentation from gap lengths on the thinned line.

use serde::Serialize;

use crate::error::Result;
use crate::raster::{blur, thin, BinaryImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// One value per row.
    Horizontal,
    /// One value per column.
    Vertical,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub axis: Axis,
    pub values: Vec<usize>,
}

/// Ink count per row (horizontal) or per column (vertical).
pub fn project(img: &BinaryImage, axis: Axis) -> Projection {
    let values = match axis {
        Axis::Horizontal => (0..img.height())
            .map(|y| img.row(y).iter().map(|&v| v as usize).sum())
            .collect(),
        Axis::Vertical => {
            let mut cols = vec![0usize; img.width()];
            for y in 0..img.height() {
                for (c, &v) in cols.iter_mut().zip(img.row(y)) {
                    *c += v as usize;
                }
            }
            cols
        }
    };
    Projection { axis, values }
}

#[derive(Clone, Debug)]
pub struct LineBand {
    pub top: usize,
    /// Inclusive.
    pub bottom: usize,
    /// Full page width, rows `top..=bottom`.
    pub image: BinaryImage,
}

#[derive(Clone, Debug)]
pub struct WordBox {
    pub left: usize,
    /// Inclusive.
    pub right: usize,
    /// Full line height, columns `left..=right`.
    pub image: BinaryImage,
    /// 0 is the rightmost word of the line.
    pub reading_order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GapStats {
    /// `(start column, length)` of each interior background run.
    pub gaps: Vec<(usize, usize)>,
    /// Runs at least this long separate words.
    pub threshold: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct WordGapConfig {
    pub scope: GapScope,
}

/// Population the word-gap threshold is estimated from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GapScope {
    /// Each line on its own.
    Line,
    /// All lines of a page together. A line holds only a dozen gaps, too
    /// few for a stable split; a page shares one font size.
    #[default]
    Page,
}

/// Splits a deskewed page into text lines.
///
/// Bands are the zero-separated runs of the blurred row projection, tightened
/// to their ink. Bands holding fewer than `min_ink` pixels (isolated dots or
/// diacritics) are merged into the nearest band below, or above when none is
/// below.
pub fn segment_lines(page: &BinaryImage, blur_radius: usize, min_ink: usize) -> Result<Vec<LineBand>> {
    if page.is_empty() || page.ink_count() == 0 {
        return Ok(Vec::new());
    }
    let blurred = blur(page, blur_radius)?;
    let w = page.width();
    let energy: Vec<u64> = (0..page.height())
        .map(|y| blurred.data()[y * w..(y + 1) * w].iter().map(|&v| v as u64).sum())
        .collect();
    let ink_rows = project(page, Axis::Horizontal).values;

    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (y, &e) in energy.iter().enumerate() {
        match (e > 0, start) {
            (true, None) => start = Some(y),
            (false, Some(s)) => {
                ranges.push((s, y - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        ranges.push((s, energy.len() - 1));
    }
    // Tighten to ink rows; a blurred band always holds ink somewhere.
    let mut bands: Vec<(usize, usize, usize)> = ranges
        .into_iter()
        .filter_map(|(s, e)| {
            let top = (s..=e).find(|&y| ink_rows[y] > 0)?;
            let bottom = (s..=e).rev().find(|&y| ink_rows[y] > 0)?;
            let ink = ink_rows[top..=bottom].iter().sum();
            Some((top, bottom, ink))
        })
        .collect();

    let mut i = 0;
    while i < bands.len() {
        if bands[i].2 >= min_ink || bands.len() == 1 {
            i += 1;
            continue;
        }
        let sliver = bands.remove(i);
        let target = if i < bands.len() { i } else { i - 1 };
        let b = &mut bands[target];
        b.0 = b.0.min(sliver.0);
        b.1 = b.1.max(sliver.1);
        b.2 += sliver.2;
        // re-examine from the merged band
        i = target;
    }

    Ok(bands
        .into_iter()
        .map(|(top, bottom, _)| LineBand {
            top,
            bottom,
            image: page.crop(0, top, page.width() - 1, bottom),
        })
        .collect())
}

/// Smallest threshold maximizing Otsu's between-class variance over integer
/// samples; classes are `v < t` and `v >= t`.
pub fn otsu_threshold(values: &[usize]) -> usize {
    let mut distinct: Vec<usize> = values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return distinct.first().map_or(1, |v| v + 1);
    }
    let n = values.len() as f64;
    let total: f64 = values.iter().map(|&v| v as f64).sum();
    let mut best = (f64::MIN, distinct[1]);
    for &t in &distinct[1..] {
        let (mut n0, mut s0) = (0.0, 0.0);
        for &v in values {
            if v < t {
                n0 += 1.0;
                s0 += v as f64;
            }
        }
        let n1 = n - n0;
        let (m0, m1) = (s0 / n0, (total - s0) / n1);
        let between = n0 * n1 * (m0 - m1) * (m0 - m1);
        if between > best.0 + 1e-9 {
            best = (between, t);
        }
    }
    best.1
}

fn median_plus_one(values: &[usize]) -> usize {
    let mut v = values.to_vec();
    v.sort_unstable();
    v[(v.len() - 1) / 2] + 1
}

/// Interior background column runs of a (thinned) line and the word-gap
/// threshold derived from their lengths.
pub fn gap_stats(thinned: &BinaryImage) -> GapStats {
    let cols = project(thinned, Axis::Vertical).values;
    let first = cols.iter().position(|&c| c > 0);
    let last = cols.iter().rposition(|&c| c > 0);
    let mut gaps = Vec::new();
    if let (Some(first), Some(last)) = (first, last) {
        let mut run_start = None;
        for (x, &c) in cols.iter().enumerate().take(last + 1).skip(first) {
            match (c == 0, run_start) {
                (true, None) => run_start = Some(x),
                (false, Some(s)) => {
                    gaps.push((s, x - s));
                    run_start = None;
                }
                _ => {}
            }
        }
    }
    let lengths: Vec<usize> = gaps.iter().map(|g| g.1).collect();
    let threshold = gap_threshold(&lengths);
    GapStats { gaps, threshold }
}

/// Word-gap threshold of a gap-length population: Otsu's split when there
/// are at least four distinct lengths. Smaller populations split at the
/// widest jump between consecutive distinct lengths if the longer one is at
/// least twice the shorter, else at the median + 1. An empty population
/// yields a threshold no gap reaches.
pub fn gap_threshold(lengths: &[usize]) -> usize {
    if lengths.is_empty() {
        return usize::MAX;
    }
    let mut distinct = lengths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() >= 4 {
        return otsu_threshold(lengths);
    }
    let jump = distinct
        .windows(2)
        .filter(|w| w[1] >= 2 * w[0].max(1))
        .max_by(|a, b| (a[1] * b[0].max(1)).cmp(&(b[1] * a[0].max(1))));
    match jump {
        Some(w) => w[1],
        None => median_plus_one(lengths),
    }
}

/// The whole inked extent of a line as a single word, for lines known to
/// hold exactly one word.
pub fn whole_line_word(line: &LineBand) -> Option<WordBox> {
    let img = &line.image;
    let (left, _, right, _) = img.ink_bounds()?;
    Some(WordBox {
        left,
        right,
        image: img.crop(left, 0, right, img.height() - 1),
        reading_order: 0,
    })
}

pub fn segment_words(line: &LineBand) -> Vec<WordBox> {
    let stats = gap_stats(&thin(&line.image));
    split_words(line, &stats, stats.threshold)
}

/// Word boxes of every line, with the gap threshold estimated per line or
/// once over the page according to `cfg.scope`.
pub fn segment_page_words(lines: &[LineBand], cfg: &WordGapConfig) -> Vec<Vec<WordBox>> {
    let stats: Vec<GapStats> = lines.iter().map(|l| gap_stats(&thin(&l.image))).collect();
    let page_threshold = match cfg.scope {
        GapScope::Line => None,
        GapScope::Page => {
            let all: Vec<usize> = stats.iter().flat_map(|s| s.gaps.iter().map(|g| g.1)).collect();
            Some(gap_threshold(&all))
        }
    };
    lines
        .iter()
        .zip(&stats)
        .map(|(line, st)| split_words(line, st, page_threshold.unwrap_or(st.threshold)))
        .collect()
}

fn split_words(line: &LineBand, stats: &GapStats, threshold: usize) -> Vec<WordBox> {
    let img = &line.image;
    let Some((ink_left, _, ink_right, _)) = img.ink_bounds() else {
        return Vec::new();
    };

    // Split columns at the middle of every qualifying gap.
    let mut splits: Vec<usize> = stats
        .gaps
        .iter()
        .filter(|g| g.1 >= threshold)
        .map(|&(s, len)| s + len / 2)
        .collect();
    splits.sort_unstable();

    let mut regions = Vec::with_capacity(splits.len() + 1);
    let mut lo = ink_left;
    for &s in &splits {
        regions.push((lo, s));
        lo = s + 1;
    }
    regions.push((lo, ink_right));

    let ink_cols = project(img, Axis::Vertical).values;
    let mut boxes: Vec<(usize, usize)> = regions
        .into_iter()
        .filter_map(|(a, b)| {
            let l = (a..=b).find(|&x| ink_cols[x] > 0)?;
            let r = (a..=b).rev().find(|&x| ink_cols[x] > 0)?;
            Some((l, r))
        })
        .collect();
    boxes.sort_by_key(|b| std::cmp::Reverse(b.1));
    boxes
        .into_iter()
        .enumerate()
        .map(|(order, (left, right))| WordBox {
            left,
            right,
            image: img.crop(left, 0, right, img.height() - 1),
            reading_order: order,
        })
        .collect()
}
