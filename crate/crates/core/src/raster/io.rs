use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use super::{BinaryImage, GrayImage};
use crate::error::{OcrError, Result};

/// Loads PNG (gray or RGB) or PNM (P1/P2/P4/P5) into luminance.
///
/// RGB is reduced with luma = round(0.299 R + 0.587 G + 0.114 B); PBM ink
/// becomes luminance 0.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| OcrError::io(path, e))?;
    if bytes.first() == Some(&b'P') {
        return parse_pnm(&bytes).map_err(|msg| OcrError::invalid(format!("{}: {msg}", path.display())));
    }
    let img = image::load_from_memory(&bytes).map_err(|source| OcrError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8
            })
            .collect(),
    };
    GrayImage::new(w, h, data)
}

fn parse_pnm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let magic = bytes.get(..2).ok_or("truncated header")?;
    let kind = match magic {
        b"P1" => 1,
        b"P2" => 2,
        b"P4" => 4,
        b"P5" => 5,
        _ => return Err(format!("unsupported PNM magic {:?}", String::from_utf8_lossy(magic))),
    };
    let header_fields = if kind == 1 || kind == 4 { 2 } else { 3 };
    // Tokenize the header, skipping comments, and remember where it ends.
    let mut pos = 2;
    let mut fields = Vec::new();
    while fields.len() < header_fields {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err("malformed header".into());
        }
        let v: usize = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| "bad header number")?;
        fields.push(v);
    }
    let (w, h) = (fields[0], fields[1]);
    let maxval = if header_fields == 3 { fields[2].max(1) } else { 1 };
    if w == 0 || h == 0 {
        return Err("zero-area image".into());
    }
    let scale = |v: usize| ((v.min(maxval) * 255 + maxval / 2) / maxval) as u8;
    let data: Vec<u8> = match kind {
        1 => {
            let bits: Vec<u8> = bytes[pos..]
                .iter()
                .filter(|b| **b == b'0' || **b == b'1')
                .map(|&b| if b == b'1' { 0 } else { 255 })
                .collect();
            bits.into_iter().take(w * h).collect()
        }
        2 => std::str::from_utf8(&bytes[pos..])
            .map_err(|_| "non-ascii P2 body")?
            .split_ascii_whitespace()
            .take(w * h)
            .map(|t| t.parse::<usize>().map(scale).map_err(|_| "bad sample"))
            .collect::<std::result::Result<_, _>>()?,
        4 => {
            let body = &bytes[pos + 1..];
            let stride = w.div_ceil(8);
            let mut out = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let byte = *body.get(y * stride + x / 8).ok_or("truncated P4 body")?;
                    out.push(if byte >> (7 - x % 8) & 1 == 1 { 0 } else { 255 });
                }
            }
            out
        }
        _ => {
            if maxval > 255 {
                return Err("16-bit PGM unsupported".into());
            }
            bytes
                .get(pos + 1..pos + 1 + w * h)
                .ok_or("truncated P5 body")?
                .iter()
                .map(|&v| scale(v as usize))
                .collect()
        }
    };
    if data.len() != w * h {
        return Err("truncated body".into());
    }
    GrayImage::new(w, h, data).map_err(|e| e.to_string())
}

pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
            .expect("dimensions match");
    buf.save(path).map_err(|source| OcrError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes ink as black on white.
pub fn save_binary_png(img: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    let gray = GrayImage::new(
        img.width().max(1),
        img.height().max(1),
        if img.is_empty() {
            vec![255]
        } else {
            img.data().iter().map(|&v| if v == 1 { 0 } else { 255 }).collect()
        },
    )?;
    save_gray_png(&gray, path)
}

/// Plain (ASCII) PBM, 1 = ink.
pub fn save_pbm(img: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    let mut s = format!("P1\n{} {}\n", img.width(), img.height());
    for y in 0..img.height() {
        let row: Vec<&str> = img.row(y).iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    let path = path.as_ref();
    fs::write(path, s).map_err(|e| OcrError::io(path, e))
}

/// Plain (ASCII) PGM with maxval 255.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let mut s = format!("P2\n{} {}\n255\n", img.width(), img.height());
    for y in 0..img.height() {
        let row: Vec<String> = img.data()[y * img.width()..(y + 1) * img.width()]
            .iter()
            .map(u8::to_string)
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    let path = path.as_ref();
    fs::write(path, s).map_err(|e| OcrError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pnm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bin = BinaryImage::from_ascii("#..\n.#.\n..#\n#.#").unwrap();
        let p = dir.path().join("a.pbm");
        save_pbm(&bin, &p).unwrap();
        let g = load_gray(&p).unwrap();
        assert_eq!((g.width(), g.height()), (3, 4));
        assert_eq!(g.get(0, 0), 0);
        assert_eq!(g.get(1, 0), 255);

        let gray = GrayImage::new(2, 2, vec![0, 17, 200, 255]).unwrap();
        let p = dir.path().join("a.pgm");
        save_pgm(&gray, &p).unwrap();
        assert_eq!(load_gray(&p).unwrap(), gray);

        let p = dir.path().join("a.png");
        save_gray_png(&gray, &p).unwrap();
        assert_eq!(load_gray(&p).unwrap(), gray);
    }

    #[test]
    fn binary_pnm_variants() {
        let g = parse_pnm(b"P5\n2 1\n255\n\x10\xf0").unwrap();
        assert_eq!(g.data(), &[16, 240]);
        let g = parse_pnm(b"P4\n# c\n3 1\n\xa0").unwrap();
        assert_eq!(g.data(), &[0, 255, 0]);
        assert!(parse_pnm(b"P7\n1 1\n").is_err());
    }

    #[test]
    fn rgb_png_uses_luma_weights() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.png");
        let buf: ImageBuffer<image::Rgb<u8>, Vec<u8>> =
            ImageBuffer::from_raw(2, 1, vec![255, 0, 0, 10, 200, 30]).unwrap();
        buf.save(&p).unwrap();
        let g = load_gray(&p).unwrap();
        assert_eq!(g.data(), &[76, 124]);
    }
}
