//! Page-level orchestration: preprocessing, layout, features and
//! character segmentation.

use serde::Serialize;

use crate::assembly::{PredictedChar, Provenance};
use crate::char_segmentation::{segment_word_traced, SegmentationTrace, SegmentedWord, ShapeThresholds};
use crate::error::Result;
use crate::page_layout::{segment_lines, segment_page_words, GapScope, LineBand, WordBox, WordGapConfig};
use crate::recognition::Classifier;
use crate::raster::{binarize, deskew, estimate_skew, BinaryImage, GrayImage, SkewEstimate};
use crate::word_features::{line_metrics_with, word_features, LineMetrics, WordFeatures};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PreprocessConfig {
    pub binarize_window: usize,
    pub binarize_offset: f64,
    pub deskew: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            binarize_window: 25,
            binarize_offset: 10.0,
            deskew: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LayoutConfig {
    pub blur_radius: usize,
    pub min_ink: usize,
    pub word_gap_scope: GapScope,
    /// Rows directly above the baseline excluded from the LMT search.
    pub lmt_margin: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            blur_radius: 2,
            min_ink: 4,
            word_gap_scope: GapScope::Page,
            lmt_margin: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SegmenterConfig {
    pub preprocess: PreprocessConfig,
    pub layout: LayoutConfig,
    pub shapes: ShapeThresholds,
}

#[derive(Clone, Debug)]
pub struct WordSegmentation {
    pub word: WordBox,
    pub features: WordFeatures,
    pub segmented: SegmentedWord,
    pub trace: SegmentationTrace,
}

#[derive(Clone, Debug)]
pub struct LineSegmentation {
    pub band: LineBand,
    pub metrics: Option<LineMetrics>,
    pub words: Vec<WordSegmentation>,
}

#[derive(Clone, Debug)]
pub struct PageSegmentation {
    pub skew: Option<SkewEstimate>,
    pub page: BinaryImage,
    pub lines: Vec<LineSegmentation>,
}

impl PageSegmentation {
    pub fn word_count(&self) -> usize {
        self.lines.iter().map(|l| l.words.len()).sum()
    }
}

/// Binarizes and, when enabled, deskews a page.
pub fn preprocess(gray: &GrayImage, cfg: &PreprocessConfig) -> Result<(BinaryImage, Option<SkewEstimate>)> {
    let bin = binarize(gray, cfg.binarize_window, cfg.binarize_offset)?;
    if !cfg.deskew || bin.ink_count() < 3 {
        return Ok((bin, None));
    }
    let est = estimate_skew(&bin)?;
    if est.angle.abs() < 0.25 {
        return Ok((bin, Some(est)));
    }
    Ok((deskew(&bin, &est)?, Some(est)))
}

/// Character segmentation of the words of one line.
pub fn segment_line(band: LineBand, words: Vec<WordBox>, cfg: &SegmenterConfig) -> LineSegmentation {
    let metrics = match line_metrics_with(&band.image, cfg.layout.lmt_margin) {
        Ok(m) => Some(m),
        Err(e) => {
            log::warn!("line at rows {}..={}: {e}", band.top, band.bottom);
            None
        }
    };
    let words = words
        .into_iter()
        .map(|word| {
            let features = match &metrics {
                Some(m) => word_features(&word.image, m),
                None => WordFeatures {
                    baseline_row: word.image.height() - 1,
                    lmt_row: 0,
                    ascender: word.image.height(),
                    ..WordFeatures::default()
                },
            };
            let (segmented, trace) = segment_word_traced(&word.image, &features, &cfg.shapes);
            WordSegmentation {
                word,
                features,
                segmented,
                trace,
            }
        })
        .collect();
    LineSegmentation {
        band,
        metrics,
        words,
    }
}

/// Segments an already binarized page.
pub fn segment_binary_page(page: BinaryImage, skew: Option<SkewEstimate>, cfg: &SegmenterConfig) -> Result<PageSegmentation> {
    let bands = segment_lines(&page, cfg.layout.blur_radius, cfg.layout.min_ink)?;
    let gap_cfg = WordGapConfig {
        scope: cfg.layout.word_gap_scope,
    };
    let words = segment_page_words(&bands, &gap_cfg);
    let lines = bands
        .into_iter()
        .zip(words)
        .map(|(b, w)| segment_line(b, w, cfg))
        .collect();
    Ok(PageSegmentation { skew, page, lines })
}

pub fn segment_page(gray: &GrayImage, cfg: &SegmenterConfig) -> Result<PageSegmentation> {
    let (page, skew) = preprocess(gray, &cfg.preprocess)?;
    segment_binary_page(page, skew, cfg)
}

/// Classifies every character of a segmented page in reading order.
///
/// Characters without ink cannot be classified and are dropped; the word's
/// end-of-word flag moves to its last remaining character.
pub fn recognize_page(seg: &PageSegmentation, clf: &Classifier, page: usize) -> Result<Vec<PredictedChar>> {
    let mut out = Vec::new();
    for (li, line) in seg.lines.iter().enumerate() {
        for (wi, w) in line.words.iter().enumerate() {
            let start = out.len();
            for (ci, pc) in w.segmented.characters.iter().enumerate() {
                if pc.raster.ink_count() == 0 {
                    continue;
                }
                let p = clf.predict(&pc.raster)?;
                out.push(PredictedChar {
                    class_id: p.class_id,
                    confidence: p.confidence,
                    eow: false,
                    provenance: Provenance {
                        page,
                        line: li,
                        word: wi,
                        char: ci,
                    },
                });
            }
            if out.len() > start {
                out.last_mut().expect("non-empty").eow = true;
            }
        }
    }
    Ok(out)
}
