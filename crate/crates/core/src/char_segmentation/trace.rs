use std::path::Path;

use image::{Rgb, RgbImage};
use serde::Serialize;

use super::{Cut, CutKind, FilterPass};
use crate::error::{OcrError, Result};
use crate::raster::BinaryImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CutDecision {
    Baseline { column: usize },
    Separation { column: usize },
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PcrTrace {
    pub order: usize,
    pub start: usize,
    pub end: usize,
    pub decision: CutDecision,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MergeRecord {
    pub pass: FilterPass,
    pub removed_cuts: Vec<usize>,
    /// Inclusive column span of the merged character.
    pub span: (usize, usize),
}

/// Rule-level account of one word's segmentation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SegmentationTrace {
    pub baseline_row: usize,
    pub lmt_row: usize,
    pub pcrs: Vec<PcrTrace>,
    pub cuts: Vec<Cut>,
    pub merges: Vec<MergeRecord>,
    pub final_spans: Vec<(usize, usize)>,
}

/// Word raster with ECC cuts drawn (baseline cuts red, separation cuts
/// orange) and surviving character boundaries marked green along the top row.
pub fn save_cut_overlay(word: &BinaryImage, trace: &SegmentationTrace, path: &Path) -> Result<()> {
    let (w, h) = (word.width() as u32, word.height() as u32);
    let mut img = RgbImage::from_fn(w, h, |x, y| {
        if word.get(x as usize, y as usize) {
            Rgb([0, 0, 0])
        } else {
            Rgb([255, 255, 255])
        }
    });
    for cut in &trace.cuts {
        let color = match cut.kind {
            CutKind::Baseline => Rgb([230, 0, 0]),
            CutKind::Separation => Rgb([255, 140, 0]),
        };
        for y in 0..h {
            if !word.get(cut.column, y as usize) {
                img.put_pixel(cut.column as u32, y, color);
            }
        }
    }
    for &(lo, _) in &trace.final_spans {
        if lo > 0 {
            img.put_pixel(lo as u32 - 1, 0, Rgb([0, 200, 0]));
        }
    }
    img.save(path).map_err(|source| OcrError::Image {
        path: path.to_path_buf(),
        source,
    })
}
