//! Writes segmentation results to disk: glyph crops and a box manifest per
//! page, plus line/word crops, overlays and rule traces in debug mode.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::char_segmentation::save_cut_overlay;
use crate::error::{OcrError, Result};
use crate::pipeline::PageSegmentation;
use crate::raster::save_binary_png;
use crate::word_features::save_feature_overlay;

#[derive(Clone, Debug, Serialize)]
struct CharBox {
    char: usize,
    /// Inclusive columns inside the word.
    lo: usize,
    hi: usize,
    file: String,
}

#[derive(Clone, Debug, Serialize)]
struct WordEntry {
    word: usize,
    left: usize,
    right: usize,
    characters: Vec<CharBox>,
}

#[derive(Clone, Debug, Serialize)]
struct LineEntry {
    line: usize,
    top: usize,
    bottom: usize,
    baseline: Option<usize>,
    lmt: Option<usize>,
    words: Vec<WordEntry>,
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| OcrError::io(dir, e))
}

/// Emits one page into `out_dir`, creating it when missing. A page without
/// text lines writes nothing. Returns the number of glyph crops written.
pub fn emit_segmentation(seg: &PageSegmentation, page_id: &str, out_dir: &Path, debug: bool) -> Result<usize> {
    mkdir(out_dir)?;
    if seg.lines.is_empty() {
        return Ok(0);
    }
    let glyph_dir = out_dir.join("glyphs");
    mkdir(&glyph_dir)?;
    if debug {
        for sub in ["lines", "words", "traces"] {
            mkdir(&out_dir.join(sub))?;
        }
    }
    let mut glyphs = 0;
    let mut lines = Vec::with_capacity(seg.lines.len());
    for (li, line) in seg.lines.iter().enumerate() {
        if debug {
            save_binary_png(&line.band.image, out_dir.join(format!("lines/{page_id}_l{li:02}.png")))?;
        }
        let mut words = Vec::with_capacity(line.words.len());
        for (wi, w) in line.words.iter().enumerate() {
            let stem = format!("{page_id}_l{li:02}_w{wi:02}");
            if debug {
                save_binary_png(&w.word.image, out_dir.join(format!("words/{stem}.png")))?;
                save_feature_overlay(&w.word.image, &w.features, &out_dir.join(format!("words/{stem}_features.png")))?;
                save_cut_overlay(&w.word.image, &w.trace, &out_dir.join(format!("words/{stem}_cuts.png")))?;
                let json = serde_json::to_string_pretty(&w.trace)?;
                let p = out_dir.join(format!("traces/{stem}.json"));
                fs::write(&p, json).map_err(|e| OcrError::io(&p, e))?;
            }
            let mut characters = Vec::with_capacity(w.segmented.len());
            for (ci, pc) in w.segmented.characters.iter().enumerate() {
                let file = format!("glyphs/{stem}_c{ci:02}.png");
                save_binary_png(&pc.raster, out_dir.join(&file))?;
                glyphs += 1;
                characters.push(CharBox {
                    char: ci,
                    lo: pc.lo,
                    hi: pc.hi,
                    file,
                });
            }
            words.push(WordEntry {
                word: wi,
                left: w.word.left,
                right: w.word.right,
                characters,
            });
        }
        lines.push(LineEntry {
            line: li,
            top: line.band.top,
            bottom: line.band.bottom,
            baseline: line.metrics.as_ref().map(|m| line.band.top + m.baseline_row),
            lmt: line.metrics.as_ref().map(|m| line.band.top + m.lmt_row),
            words,
        });
    }
    let json = serde_json::json!({
        "page": page_id,
        "skew_degrees": seg.skew.map(|s| s.angle),
        "lines": lines,
    });
    let p = out_dir.join(format!("{page_id}.json"));
    fs::write(&p, serde_json::to_string_pretty(&json)?).map_err(|e| OcrError::io(&p, e))?;
    Ok(glyphs)
}
