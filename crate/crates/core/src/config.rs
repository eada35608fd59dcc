//! Flat `section.key=value` configuration covering every pipeline knob.
//!
//! Blank lines and `#` comments are ignored; unknown keys are errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{OcrError, Result};
use crate::page_layout::GapScope;
use crate::pipeline::SegmenterConfig;
use crate::recognition::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub segmenter: SegmenterConfig,
    pub train: TrainConfig,
    pub pca_components: usize,
    pub pca_batch_size: usize,
    /// Class map JSON; the built-in 29 letters when unset.
    pub class_map: Option<PathBuf>,
    pub debug: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segmenter: SegmenterConfig::default(),
            train: TrainConfig::default(),
            pca_components: 200,
            pca_batch_size: 2048,
            class_map: None,
            debug: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| OcrError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(OcrError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

pub const KEYS: [&str; 28] = [
    "preprocess.binarize_window",
    "preprocess.binarize_offset",
    "preprocess.deskew",
    "layout.blur_radius",
    "layout.min_ink",
    "layout.word_gap_scope",
    "layout.lmt_margin",
    "segmentation.stroke_max_thickness",
    "segmentation.small_peak_ratio",
    "segmentation.dot_max_area_ratio",
    "segmentation.baseline_band",
    "segmentation.end_stroke_max_distance",
    "segmentation.min_hole_area",
    "segmentation.lead_in_max_rise",
    "train.batch_size",
    "train.epochs",
    "train.lr",
    "train.beta1",
    "train.beta2",
    "train.eps",
    "train.dropout",
    "train.seed",
    "train.validation_fraction",
    "train.hidden",
    "pca.components",
    "pca.batch_size",
    "classes.path",
    "debug.enabled",
];

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let pre = &mut self.segmenter.preprocess;
        let lay = &mut self.segmenter.layout;
        let shp = &mut self.segmenter.shapes;
        let tr = &mut self.train;
        match key.trim() {
            "preprocess.binarize_window" => pre.binarize_window = parse(key, value)?,
            "preprocess.binarize_offset" => pre.binarize_offset = parse(key, value)?,
            "preprocess.deskew" => pre.deskew = parse_bool(key, value)?,
            "layout.blur_radius" => lay.blur_radius = parse(key, value)?,
            "layout.min_ink" => lay.min_ink = parse(key, value)?,
            "layout.word_gap_scope" => {
                lay.word_gap_scope = match value {
                    "line" => GapScope::Line,
                    "page" => GapScope::Page,
                    _ => return Err(OcrError::Config(format!("{key}: expected line or page"))),
                }
            }
            "layout.lmt_margin" => lay.lmt_margin = parse(key, value)?,
            "segmentation.stroke_max_thickness" => shp.stroke_max_thickness = parse(key, value)?,
            "segmentation.small_peak_ratio" => shp.small_peak_ratio = parse(key, value)?,
            "segmentation.dot_max_area_ratio" => shp.dot_max_area_ratio = parse(key, value)?,
            "segmentation.baseline_band" => shp.baseline_band = parse(key, value)?,
            "segmentation.end_stroke_max_distance" => shp.end_stroke_max_distance = parse(key, value)?,
            "segmentation.min_hole_area" => shp.min_hole_area = parse(key, value)?,
            "segmentation.lead_in_max_rise" => shp.lead_in_max_rise = parse(key, value)?,
            "train.batch_size" => tr.batch_size = parse(key, value)?,
            "train.epochs" => tr.epochs = parse(key, value)?,
            "train.lr" => tr.lr = parse(key, value)?,
            "train.beta1" => tr.beta1 = parse(key, value)?,
            "train.beta2" => tr.beta2 = parse(key, value)?,
            "train.eps" => tr.eps = parse(key, value)?,
            "train.dropout" => tr.dropout = parse(key, value)?,
            "train.seed" => tr.seed = parse(key, value)?,
            "train.validation_fraction" => tr.validation_fraction = parse(key, value)?,
            "train.hidden" => {
                tr.hidden = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "pca.components" => self.pca_components = parse(key, value)?,
            "pca.batch_size" => self.pca_batch_size = parse(key, value)?,
            "classes.path" => self.class_map = (!value.is_empty()).then(|| PathBuf::from(value)),
            "debug.enabled" => self.debug = parse_bool(key, value)?,
            other => return Err(OcrError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| OcrError::Config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            self.set(k, v)
                .map_err(|e| OcrError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| OcrError::io(path, e))?;
        Self::parse(&text).map_err(|e| OcrError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let pre = &self.segmenter.preprocess;
        if pre.binarize_window < 3 || pre.binarize_window.is_multiple_of(2) {
            return Err(OcrError::Config("preprocess.binarize_window must be odd and >= 3".into()));
        }
        let shp = &self.segmenter.shapes;
        if !(shp.small_peak_ratio > 0.0 && shp.small_peak_ratio <= 1.0) {
            return Err(OcrError::Config("segmentation.small_peak_ratio must lie in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&shp.dot_max_area_ratio) {
            return Err(OcrError::Config("segmentation.dot_max_area_ratio must lie in [0, 1)".into()));
        }
        if self.pca_components == 0 || self.pca_batch_size == 0 {
            return Err(OcrError::Config("pca.components and pca.batch_size must be positive".into()));
        }
        if self.train.hidden.contains(&0) {
            return Err(OcrError::Config("train.hidden widths must be positive".into()));
        }
        self.train.validate()
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let pre = &self.segmenter.preprocess;
        let lay = &self.segmenter.layout;
        let shp = &self.segmenter.shapes;
        let tr = &self.train;
        let scope = match lay.word_gap_scope {
            GapScope::Line => "line",
            GapScope::Page => "page",
        };
        let hidden: Vec<String> = tr.hidden.iter().map(usize::to_string).collect();
        let values: [String; 28] = [
            pre.binarize_window.to_string(),
            pre.binarize_offset.to_string(),
            pre.deskew.to_string(),
            lay.blur_radius.to_string(),
            lay.min_ink.to_string(),
            scope.to_string(),
            lay.lmt_margin.to_string(),
            shp.stroke_max_thickness.to_string(),
            shp.small_peak_ratio.to_string(),
            shp.dot_max_area_ratio.to_string(),
            shp.baseline_band.to_string(),
            shp.end_stroke_max_distance.to_string(),
            shp.min_hole_area.to_string(),
            shp.lead_in_max_rise.to_string(),
            tr.batch_size.to_string(),
            tr.epochs.to_string(),
            tr.lr.to_string(),
            tr.beta1.to_string(),
            tr.beta2.to_string(),
            tr.eps.to_string(),
            tr.dropout.to_string(),
            tr.seed.to_string(),
            tr.validation_fraction.to_string(),
            hidden.join(","),
            self.pca_components.to_string(),
            self.pca_batch_size.to_string(),
            self.class_map.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            self.debug.to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
