//! Raster primitives and page preprocessing.
//!
//! Ink polarity is fixed: `1` is ink (dark text), `0` is background. Pages
//! with light text on a dark background must be inverted by the caller.
//! Every neighbourhood operation replicates edge pixels at the borders,
//! except thinning, which treats the outside of the raster as background.

mod io;
mod skew;
mod thin;

pub use io::{load_gray, save_binary_png, save_gray_png, save_pbm, save_pgm};
pub use skew::{deskew, estimate_skew, SkewEstimate};
pub use thin::thin;

use crate::error::{OcrError, Result};

/// 8-bit luminance raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(OcrError::invalid("gray image has zero area"));
        }
        if data.len() != width * height {
            return Err(OcrError::invalid(format!(
                "gray image data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Ink raster: every value is 0 (background) or 1 (ink).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryImage {}x{}", self.width, self.height)?;
        if self.width * self.height <= 4096 {
            for row in self.data.chunks(self.width.max(1)) {
                let line: String = row.iter().map(|&v| if v == 1 { '#' } else { '.' }).collect();
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

impl BinaryImage {
    /// Builds a raster from 0/1 values. Any other value is rejected.
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(OcrError::invalid(format!(
                "binary image data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v > 1) {
            return Err(OcrError::invalid(format!("binary image holds value {v}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    /// Parses rows of `#` (ink) and `.` (background); whitespace-only lines are skipped.
    pub fn from_ascii(art: &str) -> Result<Self> {
        let rows: Vec<&str> = art
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut data = Vec::with_capacity(width * height);
        for row in &rows {
            if row.chars().count() != width {
                return Err(OcrError::invalid("ragged ascii raster"));
            }
            data.extend(row.chars().map(|c| u8::from(c == '#' || c == '1')));
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ink: bool) {
        self.data[y * self.width + x] = u8::from(ink);
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn ink_count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn column_ink(&self, x: usize) -> usize {
        (0..self.height).filter(|&y| self.get(x, y)).count()
    }

    /// Copies the inclusive rectangle `[left, right] x [top, bottom]`.
    pub fn crop(&self, left: usize, top: usize, right: usize, bottom: usize) -> BinaryImage {
        debug_assert!(left <= right && right < self.width);
        debug_assert!(top <= bottom && bottom < self.height);
        let w = right - left + 1;
        let h = bottom - top + 1;
        let mut data = Vec::with_capacity(w * h);
        for y in top..=bottom {
            data.extend_from_slice(&self.data[y * self.width + left..=y * self.width + right]);
        }
        BinaryImage {
            width: w,
            height: h,
            data,
        }
    }

    /// Inclusive bounding box of ink as `(left, top, right, bottom)`.
    pub fn ink_bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bounds = Some(match bounds {
                        None => (x, y, x, y),
                        Some((l, t, r, b)) => (l.min(x), t.min(y), r.max(x), b.max(y)),
                    });
                }
            }
        }
        bounds
    }
}

fn check_area(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        Err(OcrError::invalid("image has zero area"))
    } else {
        Ok(())
    }
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Normalized 1-D Gaussian weights for an odd window, sigma = window / 6.
pub(crate) fn gaussian_kernel(window: usize) -> Vec<f64> {
    let radius = (window / 2) as isize;
    let sigma = window as f64 / 6.0;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Adaptive Gaussian thresholding: a pixel is ink iff its luminance is below
/// the Gaussian-weighted mean of its `window` x `window` neighbourhood minus
/// `offset`.
pub fn binarize(img: &GrayImage, window: usize, offset: f64) -> Result<BinaryImage> {
    check_area(img.width, img.height)?;
    if window < 3 || window.is_multiple_of(2) {
        return Err(OcrError::invalid(format!(
            "binarize window must be odd and >= 3, got {window}"
        )));
    }
    let (w, h) = (img.width, img.height);
    let kernel = gaussian_kernel(window);
    let radius = (window / 2) as isize;

    // Separable pass: rows first, then columns.
    let mut horiz = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &img.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sx = clamp_index(x as isize + k as isize - radius, w);
                acc += weight * row[sx] as f64;
            }
            horiz[y * w + x] = acc;
        }
    }
    let mut data = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut mean = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sy = clamp_index(y as isize + k as isize - radius, h);
                mean += weight * horiz[sy * w + x];
            }
            data[y * w + x] = u8::from((img.data[y * w + x] as f64) < mean - offset);
        }
    }
    Ok(BinaryImage {
        width: w,
        height: h,
        data,
    })
}

/// Box blur of the ink raster with ink counted as 255. Output values are the
/// window mean rounded to nearest.
pub fn blur(img: &BinaryImage, radius: usize) -> Result<GrayImage> {
    check_area(img.width, img.height)?;
    if radius == 0 {
        return Err(OcrError::invalid("blur radius must be >= 1"));
    }
    let (w, h) = (img.width, img.height);
    let r = radius as isize;
    let mut horiz = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0u32;
            for dx in -r..=r {
                acc += img.data[y * w + clamp_index(x as isize + dx, w)] as u32;
            }
            horiz[y * w + x] = acc;
        }
    }
    let side = (2 * radius + 1) as u32;
    let area = side * side;
    let mut data = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut count = 0u32;
            for dy in -r..=r {
                count += horiz[clamp_index(y as isize + dy, h) * w + x];
            }
            // round(255 * count / area) in integer arithmetic
            data[y * w + x] = ((2 * 255 * count + area) / (2 * area)) as u8;
        }
    }
    GrayImage::new(w, h, data)
}
