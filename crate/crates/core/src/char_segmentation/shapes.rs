//! Shape facts of a potential character and the stroke/bowl predicates the
//! cut filtration rules are written in.

use serde::Serialize;

use crate::components::{enclosed_background, label_ink};
use crate::raster::BinaryImage;
use crate::word_features::WordFeatures;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShapeThresholds {
    /// Widest horizontal ink run (above the baseline band) a stroke may have.
    pub stroke_max_thickness: usize,
    /// A peak is "small" when it is at most this share of the line ascender.
    pub small_peak_ratio: f64,
    /// Dot components are at most this share of the word raster area.
    pub dot_max_area_ratio: f64,
    /// Rows within this distance of the baseline count as the baseline.
    pub baseline_band: usize,
    /// Largest leftmost-to-uppermost pixel distance of an end stroke.
    pub end_stroke_max_distance: usize,
    /// Enclosed background regions smaller than this are ignored.
    pub min_hole_area: usize,
    /// Rows above the baseline band a word's lead-in hook may reach.
    pub lead_in_max_rise: usize,
}

impl Default for ShapeThresholds {
    fn default() -> Self {
        Self {
            stroke_max_thickness: 2,
            small_peak_ratio: 0.5,
            dot_max_area_ratio: 0.02,
            baseline_band: 1,
            end_stroke_max_distance: 2,
            min_hole_area: 1,
            lead_in_max_rise: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ShapeFacts {
    pub has_dots_above: bool,
    pub has_dots_below: bool,
    pub has_hole: bool,
    /// Rows of body ink above the baseline row.
    pub peak_height: usize,
    pub dips_below_baseline: bool,
    pub baseline_vanishes_and_resurfaces: bool,
    pub right_cut_has_ink: bool,
    pub left_cut_has_ink: bool,
    pub right_cut_on_baseline: bool,
    pub left_cut_on_baseline: bool,
    pub is_one_pixel_stroke: bool,
    /// Horizontal distance between the leftmost and the uppermost body pixel.
    pub end_stroke_distance: usize,
    /// Separate body ink runs crossing the LMT row.
    pub teeth: usize,
}

/// Where a potential character sits inside its word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PcGeometry {
    /// Inclusive column span inside the word raster.
    pub lo: usize,
    pub hi: usize,
    pub right_cut: Option<usize>,
    pub left_cut: Option<usize>,
}

/// Rows treated as "on the baseline": the configured band, widened to the
/// measured baseline stroke.
pub(crate) fn band(f: &WordFeatures, cfg: &ShapeThresholds, height: usize) -> (usize, usize) {
    let lo = f.baseline_row.saturating_sub(cfg.baseline_band.max(f.pen.above));
    let hi = (f.baseline_row + cfg.baseline_band.max(f.pen.below)).min(height.saturating_sub(1));
    (lo, hi)
}

/// Widest run a stroke may have: the configured limit or the measured pen
/// thickness, whichever is larger.
pub(crate) fn stroke_limit(f: &WordFeatures, cfg: &ShapeThresholds) -> usize {
    cfg.stroke_max_thickness.max(f.pen.thickness())
}

fn column_has_ink(word: &BinaryImage, x: Option<usize>) -> bool {
    x.is_some_and(|x| x < word.width() && word.column_ink(x) > 0)
}

fn column_on_baseline(word: &BinaryImage, x: Option<usize>, band: (usize, usize)) -> bool {
    x.is_some_and(|x| x < word.width() && (band.0..=band.1).any(|y| word.get(x, y)))
}

/// Measures every shape fact of the potential character spanning `geo`.
pub fn classify_pc(
    word: &BinaryImage,
    geo: &PcGeometry,
    f: &WordFeatures,
    cfg: &ShapeThresholds,
) -> ShapeFacts {
    let h = word.height();
    let (band_lo, band_hi) = band(f, cfg, h);
    let crop = word.crop(geo.lo, 0, geo.hi, h - 1);
    let labels = label_ink(&crop);
    let word_labels = label_ink(word);
    let dot_max = ((cfg.dot_max_area_ratio * (word.width() * h) as f64).floor() as usize).max(1);

    let mut facts = ShapeFacts {
        right_cut_has_ink: column_has_ink(word, geo.right_cut),
        left_cut_has_ink: column_has_ink(word, geo.left_cut),
        right_cut_on_baseline: column_on_baseline(word, geo.right_cut, (band_lo, band_hi)),
        left_cut_on_baseline: column_on_baseline(word, geo.left_cut, (band_lo, band_hi)),
        ..ShapeFacts::default()
    };

    // Word-level component of every crop component, and how much of each
    // word component lies inside this span.
    let mut owner = vec![0u32; labels.components.len() + 1];
    let mut inside = vec![0usize; word_labels.components.len() + 1];
    for y in 0..h {
        for x in 0..crop.width() {
            let l = labels.at(x, y);
            if l != 0 {
                let wl = word_labels.at(geo.lo + x, y);
                owner[l as usize] = wl;
                inside[wl as usize] += 1;
            }
        }
    }

    // Components off the baseline band are dots when small at word level,
    // and overhangs of a neighbouring letter (a raa tail under the next
    // tooth, say) when most of their word component lies outside the span.
    let mut ignore = vec![false; labels.components.len() + 1];
    for c in &labels.components {
        if c.top <= band_hi && c.bottom >= band_lo {
            continue;
        }
        let wl = owner[c.label as usize];
        let Some(wc) = word_labels.component(wl) else {
            continue;
        };
        let word_touches_band = wc.top <= band_hi && wc.bottom >= band_lo;
        if wc.area <= dot_max && !word_touches_band {
            ignore[c.label as usize] = true;
            if c.bottom < band_lo {
                facts.has_dots_above = true;
            } else {
                facts.has_dots_below = true;
            }
        } else if inside[wl as usize] * 2 < wc.area {
            ignore[c.label as usize] = true;
        }
    }

    let mut body = BinaryImage::blank(crop.width(), h);
    for y in 0..h {
        for x in 0..crop.width() {
            let l = labels.at(x, y);
            if l != 0 && !ignore[l as usize] {
                body.set(x, y, true);
            }
        }
    }
    let Some((left, top, _, bottom)) = body.ink_bounds() else {
        return facts;
    };

    facts.has_hole = enclosed_background(&body)
        .iter()
        .any(|&a| a >= cfg.min_hole_area.max(1));
    facts.peak_height = f.baseline_row.saturating_sub(top);
    facts.dips_below_baseline = bottom > band_hi;

    // A column is on the baseline if any band row has ink there.
    let on: Vec<bool> = (0..body.width())
        .map(|x| (band_lo..=band_hi).any(|y| body.get(x, y)))
        .collect();
    let first = on.iter().position(|&v| v);
    let last = on.iter().rposition(|&v| v);
    if let (Some(a), Some(b)) = (first, last) {
        facts.baseline_vanishes_and_resurfaces = on[a..=b].contains(&false);
    }

    let limit = stroke_limit(f, cfg);
    let mut any_above = false;
    let mut thick_rows = 0;
    for y in 0..band_lo {
        let mut run = 0;
        let mut thick = false;
        for &v in body.row(y) {
            if v == 1 {
                run += 1;
                any_above = true;
                thick |= run > limit;
            } else {
                run = 0;
            }
        }
        thick_rows += usize::from(thick);
    }
    // One thick row is tolerated: the rounded head of a tooth.
    facts.is_one_pixel_stroke = any_above && thick_rows <= 1;
    if f.lmt_row < band_lo {
        let row = body.row(f.lmt_row);
        facts.teeth = (0..row.len()).filter(|&x| row[x] == 1 && (x == 0 || row[x - 1] == 0)).count();
    }

    // Uppermost pixel: topmost row, leftmost within it.
    let up_x = (0..body.width()).find(|&x| body.get(x, top)).unwrap_or(0);
    facts.end_stroke_distance = up_x.abs_diff(left);
    facts
}

/// Predicates over shape facts; `merged` PCs are whole characters and never
/// count as strokes or bowls.
#[derive(Clone, Copy, Debug)]
pub struct ShapeContext<'a> {
    pub cfg: &'a ShapeThresholds,
    pub ascender: usize,
    /// Rows of the baseline band above the baseline row.
    pub band_above: usize,
}

impl ShapeContext<'_> {
    fn small_peak(&self, f: &ShapeFacts) -> bool {
        f.peak_height as f64 <= self.cfg.small_peak_ratio * self.ascender as f64
    }

    fn plain_stroke(&self, f: &ShapeFacts) -> bool {
        f.is_one_pixel_stroke && !f.has_hole && self.small_peak(f) && !f.dips_below_baseline
    }

    pub fn is_seen_stroke(&self, f: &ShapeFacts) -> bool {
        self.plain_stroke(f) && !f.has_dots_above && !f.has_dots_below
    }

    pub fn is_sheen_stroke(&self, f: &ShapeFacts) -> bool {
        self.plain_stroke(f) && f.has_dots_above && !f.has_dots_below
    }

    /// An open tail: a closed loop dipping under the baseline (final meem,
    /// waw) is not a bowl.
    pub fn is_bowl(&self, f: &ShapeFacts) -> bool {
        !f.has_hole
            && !f.has_dots_above
            && !f.has_dots_below
            && f.right_cut_has_ink
            && !f.left_cut_has_ink
            && f.baseline_vanishes_and_resurfaces
            && f.dips_below_baseline
            && self.small_peak(f)
    }

    pub fn is_saad_stroke(&self, f: &ShapeFacts) -> bool {
        self.is_seen_stroke(f) && f.right_cut_has_ink && f.left_cut_has_ink
    }

    /// Bare baseline ink with at most a small rise: the entry hook some
    /// letters (initial ain, ghain) start with, never a letter on its own.
    pub fn is_lead_in(&self, f: &ShapeFacts) -> bool {
        !f.has_dots_above
            && !f.has_dots_below
            && !f.has_hole
            && !f.dips_below_baseline
            && f.peak_height <= self.band_above + self.cfg.lead_in_max_rise
    }

    pub fn is_end_stroke(&self, f: &ShapeFacts) -> bool {
        self.is_seen_stroke(f)
            && f.right_cut_on_baseline
            && !f.left_cut_on_baseline
            && f.end_stroke_distance <= self.cfg.end_stroke_max_distance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(baseline: usize, ascender: usize) -> WordFeatures {
        WordFeatures {
            baseline_row: baseline,
            lmt_row: baseline.saturating_sub(2),
            ascender,
            ..WordFeatures::default()
        }
    }

    fn whole(img: &BinaryImage) -> PcGeometry {
        PcGeometry {
            lo: 0,
            hi: img.width() - 1,
            right_cut: None,
            left_cut: None,
        }
    }

    #[test]
    fn ring_has_hole() {
        let img = BinaryImage::from_ascii(
            "
            .......
            ..###..
            .#...#.
            .#...#.
            ..###..
            .......
            ",
        )
        .unwrap();
        let f = features(4, 4);
        let facts = classify_pc(&img, &whole(&img), &f, &ShapeThresholds::default());
        assert!(facts.has_hole);
    }

    #[test]
    fn vertical_stroke_facts() {
        // 1-px stroke of height 3 standing on the baseline (row 5).
        let img = BinaryImage::from_ascii(
            "
            .....
            .....
            ..#..
            ..#..
            ..#..
            ..#..
            .....
            ",
        )
        .unwrap();
        let f = features(5, 10);
        let cfg = ShapeThresholds::default();
        let facts = classify_pc(&img, &whole(&img), &f, &cfg);
        assert!(facts.is_one_pixel_stroke);
        assert!(!facts.has_dots_above && !facts.has_dots_below && !facts.has_hole);
        assert_eq!(facts.peak_height, 3);
        let ctx = ShapeContext { cfg: &cfg, ascender: 10, band_above: 1 };
        assert!(ctx.is_seen_stroke(&facts));
        assert!(!ctx.is_sheen_stroke(&facts));
    }

    #[test]
    fn dotted_stroke_is_sheen() {
        let img = BinaryImage::from_ascii(
            "
            .##..
            .##..
            .....
            ..#..
            ..#..
            ..#..
            ..#..
            .....
            ",
        )
        .unwrap();
        let f = features(6, 10);
        let cfg = ShapeThresholds {
            dot_max_area_ratio: 0.2,
            ..ShapeThresholds::default()
        };
        let facts = classify_pc(&img, &whole(&img), &f, &cfg);
        assert!(facts.has_dots_above);
        assert_eq!(facts.peak_height, 3);
        let ctx = ShapeContext { cfg: &cfg, ascender: 10, band_above: 1 };
        assert!(ctx.is_sheen_stroke(&facts));
        assert!(!ctx.is_seen_stroke(&facts));
    }

    #[test]
    fn tall_stroke_is_not_seen() {
        let mut img = BinaryImage::blank(3, 12);
        for y in 1..=10 {
            img.set(1, y, true);
        }
        let f = features(10, 10);
        let cfg = ShapeThresholds::default();
        let facts = classify_pc(&img, &whole(&img), &f, &cfg);
        assert_eq!(facts.peak_height, 9);
        assert!(!ShapeContext { cfg: &cfg, ascender: 10, band_above: 1 }.is_seen_stroke(&facts));
    }

    #[test]
    fn bowl_shape() {
        // Baseline row 3 enters from the right cut, vanishes over the bowl
        // interior and resurfaces at the left rim; the bowl dips to row 5.
        let img = BinaryImage::from_ascii(
            "
            ..........
            ..........
            .#........
            .#....####
            .#....#...
            ..####....
            ",
        )
        .unwrap();
        let f = features(3, 8);
        let cfg = ShapeThresholds {
            baseline_band: 0,
            ..ShapeThresholds::default()
        };
        let geo = PcGeometry {
            lo: 1,
            hi: 8,
            right_cut: Some(9),
            left_cut: Some(0),
        };
        let facts = classify_pc(&img, &geo, &f, &cfg);
        assert!(facts.baseline_vanishes_and_resurfaces);
        assert!(facts.dips_below_baseline);
        assert!(facts.right_cut_has_ink && !facts.left_cut_has_ink);
        assert!(ShapeContext { cfg: &cfg, ascender: 8, band_above: 1 }.is_bowl(&facts));
    }

    #[test]
    fn end_stroke_distance_is_horizontal() {
        // A stroke rising at the left end: leftmost and uppermost coincide.
        let img = BinaryImage::from_ascii(
            "
            #....
            #....
            #####
            ",
        )
        .unwrap();
        let f = features(2, 4);
        let cfg = ShapeThresholds {
            baseline_band: 0,
            ..ShapeThresholds::default()
        };
        let facts = classify_pc(&img, &whole(&img), &f, &cfg);
        assert_eq!(facts.end_stroke_distance, 0);
        // daal-like: the top sits right of the leftmost pixel
        let img = BinaryImage::from_ascii(
            "
            ....#
            ....#
            #####
            ",
        )
        .unwrap();
        let facts = classify_pc(&img, &whole(&img), &f, &cfg);
        assert_eq!(facts.end_stroke_distance, 4);
    }
}
