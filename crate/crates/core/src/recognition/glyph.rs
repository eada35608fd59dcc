//! Glyph normalization to the classifier's fixed 24×24 input.

use crate::error::{OcrError, Result};
use crate::raster::BinaryImage;

pub const GLYPH_SIDE: usize = 24;
pub const GLYPH_DIM: usize = GLYPH_SIDE * GLYPH_SIDE;

/// Crops to the ink, shrinks so the longer side fits 24 pixels (aspect kept,
/// nearest neighbour) and centres the result. Glyphs already smaller than
/// the frame keep their pixel size, so a single dot stays a single pixel.
pub fn normalize_glyph(crop: &BinaryImage) -> Result<Vec<f32>> {
    let (l, t, r, b) = crop
        .ink_bounds()
        .ok_or_else(|| OcrError::invalid("glyph crop holds no ink"))?;
    let (w, h) = (r - l + 1, b - t + 1);
    let m = w.max(h);
    let mut out = vec![0f32; GLYPH_DIM];
    if m <= GLYPH_SIDE {
        let (ox, oy) = ((GLYPH_SIDE - w) / 2, (GLYPH_SIDE - h) / 2);
        for y in 0..h {
            for x in 0..w {
                if crop.get(l + x, t + y) {
                    out[(oy + y) * GLYPH_SIDE + ox + x] = 1.0;
                }
            }
        }
        return Ok(out);
    }
    // Integer arithmetic keeps the sampling grid exact: target pixel i reads
    // source floor((i + 0.5) * m / 24).
    let n = GLYPH_SIDE;
    let fit = |len: usize| ((2 * len * n + m) / (2 * m)).clamp(1, n);
    let (tw, th) = (fit(w), fit(h));
    let src = |i: usize, len: usize| (((2 * i + 1) * m) / (2 * n)).min(len - 1);
    let (ox, oy) = ((n - tw) / 2, (n - th) / 2);
    for y in 0..th {
        let sy = src(y, h);
        for x in 0..tw {
            if crop.get(l + src(x, w), t + sy) {
                out[(oy + y) * n + ox + x] = 1.0;
            }
        }
    }
    Ok(out)
}
