//! Layout and feature checks against generated pages with known geometry.

mod common;

use std::path::Path;

use aocr::char_segmentation::{ecc, potential_characters, ShapeThresholds};
use aocr::components::label_ink;
use aocr::dataset::discover_corpus;
use aocr::page_layout::{segment_lines, segment_words, LineBand, WordBox};
use aocr::pipeline::{preprocess, segment_line, PreprocessConfig};
use aocr::raster::{binarize, deskew, estimate_skew, load_gray, thin, BinaryImage};
use aocr::word_features::{find_baseline, line_metrics_with, word_features};
use common::fixtures;
use serde_json::Value;

fn layout_page(name: &str) -> (BinaryImage, Value) {
    let dir = fixtures().join("layout").join(name);
    let id = format!("{}_0000", if name == "words" { "word" } else { name });
    page_and_meta(&dir, &id)
}

fn page_and_meta(dir: &Path, id: &str) -> (BinaryImage, Value) {
    let gray = load_gray(dir.join("pages").join(format!("{id}.png"))).unwrap();
    let cfg = PreprocessConfig::default();
    let bin = binarize(&gray, cfg.binarize_window, cfg.binarize_offset).unwrap();
    let meta = std::fs::read_to_string(dir.join("meta").join(format!("{id}.json"))).unwrap();
    (bin, serde_json::from_str(&meta).unwrap())
}

fn col(v: &Value) -> usize {
    v.as_u64().unwrap() as usize
}

fn word_box(band: &LineBand, w: &Value) -> WordBox {
    let (left, right) = (col(&w["left"]), col(&w["right"]));
    WordBox {
        left,
        right,
        image: band.image.crop(left, 0, right, band.image.height() - 1),
        reading_order: 0,
    }
}

const SKEWS: [(&str, f64); 6] = [
    ("skew_m15", -15.0),
    ("skew_m10", -10.0),
    ("skew_m5", -5.0),
    ("skew_5", 5.0),
    ("skew_10", 10.0),
    ("skew_15", 15.0),
];

#[test]
fn rotated_rectangle_is_measured() {
    let (level, _) = layout_page("rect_level");
    assert_eq!(estimate_skew(&level).unwrap().angle, 0.0);
    let (page, _) = layout_page("rect_skew_5");
    let est = estimate_skew(&page).unwrap();
    assert!((est.angle - 5.0).abs() <= 0.5, "{}", est.angle);
}

#[test]
fn deskewed_pages_measure_level() {
    for (name, truth) in SKEWS {
        let (page, _) = layout_page(name);
        let est = estimate_skew(&page).unwrap();
        assert!((est.angle - truth).abs() <= 1.0, "{name}: {}", est.angle);
        let again = estimate_skew(&deskew(&page, &est).unwrap()).unwrap();
        assert!(again.angle.abs() <= 1.0, "{name}: residual {}", again.angle);
    }
}

fn ink_crop(img: &BinaryImage) -> BinaryImage {
    let (l, t, r, b) = img.ink_bounds().unwrap();
    img.crop(l, t, r, b)
}

/// Best Jaccard overlap over small translations of `b` against `a`.
fn jaccard(a: &BinaryImage, b: &BinaryImage, slack: i64) -> f64 {
    let mut best: f64 = 0.0;
    for dy in -slack..=slack {
        for dx in -slack..=slack {
            let (mut inter, mut union) = (0usize, 0usize);
            let w = a.width().max(b.width()) as i64 + slack;
            let h = a.height().max(b.height()) as i64 + slack;
            for y in -slack..h {
                for x in -slack..w {
                    let pa = x >= 0 && y >= 0 && (x as usize) < a.width() && (y as usize) < a.height() && a.get(x as usize, y as usize);
                    let (bx, by) = (x - dx, y - dy);
                    let pb = bx >= 0 && by >= 0 && (bx as usize) < b.width() && (by as usize) < b.height() && b.get(bx as usize, by as usize);
                    inter += usize::from(pa && pb);
                    union += usize::from(pa || pb);
                }
            }
            best = best.max(inter as f64 / union.max(1) as f64);
        }
    }
    best
}

#[test]
fn deskew_restores_the_level_rectangle() {
    let (level, _) = layout_page("rect_level");
    let (rotated, _) = layout_page("rect_skew_5");
    let est = estimate_skew(&rotated).unwrap();
    let restored = ink_crop(&deskew(&rotated, &est).unwrap());
    let j = jaccard(&ink_crop(&level), &restored, 2);
    println!("jaccard {j:.3}");
    assert!(j >= 0.9, "{j}");
}

#[test]
fn dotted_lines_are_found_whole() {
    let (page, meta) = layout_page("dotted3");
    let bands = segment_lines(&page, 2, 4).unwrap();
    let lines = meta["lines"].as_array().unwrap();
    assert_eq!(bands.len(), 3);
    for (band, line) in bands.iter().zip(lines) {
        // The band covers the generator's line, so it holds letter bodies
        // and not only a row of dots.
        assert!(band.top <= col(&line["baseline"]) && col(&line["baseline"]) <= band.bottom);
        let biggest = label_ink(&band.image).components.iter().map(|c| c.area).max().unwrap();
        assert!(biggest * 10 > band.image.ink_count() / lines.len(), "{band:?}");
    }
}

#[test]
fn seven_word_line_matches_generator_boxes() {
    let (page, meta) = layout_page("line7");
    let bands = segment_lines(&page, 2, 4).unwrap();
    assert_eq!(bands.len(), 1);
    let boxes = segment_words(&bands[0]);
    let truth = meta["lines"][0]["words"].as_array().unwrap();
    assert_eq!(boxes.len(), 7);
    for (b, t) in boxes.iter().zip(truth) {
        assert!(b.left.abs_diff(col(&t["left"])) <= 1, "{} vs {}", b.left, t["left"]);
        assert!(b.right.abs_diff(col(&t["right"])) <= 1, "{} vs {}", b.right, t["right"]);
    }
}

#[test]
fn two_words_with_a_wide_gap_split_in_two() {
    // Word crops from the line fixture, glued with a gap twice their widest
    // inner gap after thinning, which is what the gap statistics see.
    let (page, meta) = layout_page("line7");
    let band = segment_lines(&page, 2, 4).unwrap().remove(0);
    let words: Vec<BinaryImage> = meta["lines"][0]["words"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| word_box(&band, w).image)
        .collect();
    let inner_gap = |img: &BinaryImage| {
        let img = thin(img);
        let cols: Vec<bool> = (0..img.width()).map(|x| img.column_ink(x) > 0).collect();
        let (first, last) = (cols.iter().position(|&c| c).unwrap(), cols.iter().rposition(|&c| c).unwrap());
        cols[first..=last].split(|&c| c).map(<[bool]>::len).max().unwrap_or(0)
    };
    let h = band.image.height();
    for a in &words {
        for b in &words {
            // A lone gap carries no statistics to separate it from letter
            // gaps, so at least one word must have a gap of its own.
            let inner = inner_gap(a).max(inner_gap(b));
            if inner == 0 {
                continue;
            }
            let gap = 2 * inner;
            let mut joined = BinaryImage::blank(a.width() + gap + b.width(), h);
            for y in 0..h {
                for x in 0..b.width() {
                    joined.set(x, y, b.get(x, y));
                }
                for x in 0..a.width() {
                    joined.set(b.width() + gap + x, y, a.get(x, y));
                }
            }
            let line = LineBand {
                top: 0,
                bottom: h - 1,
                image: joined,
            };
            assert_eq!(segment_words(&line).len(), 2);
        }
    }
}

#[test]
fn baselines_match_generator_rows() {
    let dir = fixtures().join("corpora/clean");
    let mut checked = 0;
    for p in discover_corpus(&dir).unwrap().iter().take(20) {
        let (page, meta) = page_and_meta(&dir, &p.id);
        let bands = segment_lines(&page, 2, 4).unwrap();
        let lines = meta["lines"].as_array().unwrap();
        assert_eq!(bands.len(), lines.len(), "{}", p.id);
        for (band, line) in bands.iter().zip(lines) {
            let found = band.top + find_baseline(&band.image).unwrap();
            assert!(found.abs_diff(col(&line["baseline"])) <= 1, "{}: {found} vs {}", p.id, line["baseline"]);
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn lmt_crosses_every_letter_of_saif() {
    let (page, meta) = layout_page("words");
    let band = segment_lines(&page, 2, 4).unwrap().remove(0);
    let m = line_metrics_with(&band.image, 1).unwrap();
    let word = word_box(&band, &meta["lines"][0]["words"][0]);
    let row = word.image.row(m.lmt_row);
    let runs = (0..row.len()).filter(|&x| row[x] == 1 && (x == 0 || row[x - 1] == 0)).count();
    assert!(runs >= 3, "{runs}");
}

#[test]
fn four_letter_word_has_three_cut_regions() {
    let dir = fixtures().join("layout/words");
    let (page, meta) = page_and_meta(&dir, "word_0001");
    assert_eq!(meta["lines"][0]["words"][0]["text"], "يكتب");
    let band = segment_lines(&page, 2, 4).unwrap().remove(0);
    let m = line_metrics_with(&band.image, 1).unwrap();
    let word = word_box(&band, &meta["lines"][0]["words"][0]);
    let f = word_features(&word.image, &m);
    assert!(f.pcrs.len() >= 3, "{:?}", f.pcrs);
}

#[test]
fn sheen_teeth_carry_their_dots() {
    // Every medial sheen fixture has a potential character that is a thin
    // stroke with dots above.
    let dir = fixtures().join("golden/sheen_medial");
    let cfg = ShapeThresholds::default();
    for p in discover_corpus(&dir).unwrap() {
        let gray = load_gray(&p.image).unwrap();
        let (page, _) = preprocess(&gray, &PreprocessConfig { deskew: false, ..Default::default() }).unwrap();
        let band = segment_lines(&page, 2, 4).unwrap().remove(0);
        let (_, meta) = page_and_meta(&dir, &p.id);
        let word = word_box(&band, &meta["lines"][0]["words"][0]);
        let line = segment_line(band, vec![word], &Default::default());
        let w = &line.words[0];
        let pcs = potential_characters(&w.word.image, &ecc(&w.word.image, &w.features, &cfg), &w.features, &cfg);
        assert!(
            pcs.iter().any(|pc| pc.facts.has_dots_above && pc.facts.is_one_pixel_stroke),
            "{}",
            p.id
        );
    }
}
