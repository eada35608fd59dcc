//! Segmentation-first OCR for printed Arabic script.
//!
//! A page goes through binarization and deskewing, projection-based line and
//! word segmentation, per-line baseline/LMT estimation, character
//! segmentation by excessive cut creation and improved cut filtration, a
//! PCA + feed-forward classifier, and end-of-word aware text assembly.

pub mod assembly;
pub mod char_segmentation;
pub mod classmap;
pub mod components;
pub mod config;
pub mod dataset;
pub mod debug;
pub mod error;
pub mod evaluation;
pub mod metrics;
pub mod page_layout;
pub mod pipeline;
pub mod raster;
pub mod recognition;
pub mod word_features;

pub use error::{OcrError, Result};
