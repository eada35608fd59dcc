//! Self-generated training data: segment pages whose text is known, keep
//! the words whose character count matches the text, and label their glyphs
//! in reading order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::char_segmentation::{PotentialCharacter, SegmentedWord};
use crate::classmap::ClassMap;
use crate::error::{OcrError, Result};
use crate::pipeline::{segment_page, PageSegmentation, SegmenterConfig};
use crate::raster::load_gray;
use crate::recognition::{normalize_glyph, GlyphSample, GLYPH_DIM, GLYPH_SIDE};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const PACKED_FILE: &str = "samples.bin";
pub const SUMMARY_FILE: &str = "summary.json";
const PACKED_MAGIC: &[u8; 4] = b"AGLY";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignStatus {
    Accepted,
    Discarded,
}

#[derive(Clone, Debug)]
pub struct AlignedWord {
    pub segmented: SegmentedWord,
    /// Class ids in reading order.
    pub truth: Vec<usize>,
    pub status: AlignStatus,
}

impl AlignedWord {
    /// Characters with their labels, rightmost first. Empty when discarded.
    pub fn pairs(&self) -> impl Iterator<Item = (&PotentialCharacter, usize)> {
        let n = if self.status == AlignStatus::Accepted { self.truth.len() } else { 0 };
        self.segmented.characters.iter().zip(self.truth.iter().copied()).take(n)
    }
}

/// Accepts the word when its segment count equals its letter count.
pub fn align(seg: SegmentedWord, truth_word: &str, map: &ClassMap) -> Result<AlignedWord> {
    let truth = map.encode_word(truth_word)?;
    let status = if seg.len() == truth.len() {
        AlignStatus::Accepted
    } else {
        AlignStatus::Discarded
    };
    Ok(AlignedWord {
        segmented: seg,
        truth,
        status,
    })
}

/// One page image with its text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusPage {
    pub id: String,
    pub image: PathBuf,
    pub truth: PathBuf,
}

impl CorpusPage {
    pub fn read_truth(&self) -> Result<String> {
        fs::read_to_string(&self.truth).map_err(|e| OcrError::io(&self.truth, e))
    }
}

/// Pairs `pages/<id>.{png,pgm,pbm}` with `truth/<id>.txt`, sorted by id.
pub fn discover_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusPage>> {
    let dir = dir.as_ref();
    let pages_dir = dir.join("pages");
    let entries = fs::read_dir(&pages_dir).map_err(|e| OcrError::io(&pages_dir, e))?;
    let mut pages = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| OcrError::io(&pages_dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !matches!(ext, "png" | "pgm" | "pbm") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        let truth = dir.join("truth").join(format!("{id}.txt"));
        if !truth.exists() {
            log::warn!("{}: no truth file, skipped", path.display());
            continue;
        }
        pages.push(CorpusPage { id, image: path, truth });
    }
    pages.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(pages)
}

/// Text tokens of one segmented line.
#[derive(Clone, Debug)]
pub struct LineTruth {
    pub tokens: Vec<String>,
    pub words_match: bool,
}

/// Splits page text into per-line tokens and checks it against the bands.
pub fn pair_lines(seg: &PageSegmentation, truth: &str) -> Result<Vec<LineTruth>> {
    let lines: Vec<Vec<String>> = truth
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    if lines.len() != seg.lines.len() {
        return Err(OcrError::PageMismatch(format!(
            "text has {} line(s), page has {} band(s)",
            lines.len(),
            seg.lines.len()
        )));
    }
    Ok(lines
        .into_iter()
        .zip(&seg.lines)
        .map(|(tokens, l)| LineTruth {
            words_match: tokens.len() == l.words.len(),
            tokens,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    /// Relative to the dataset directory.
    pub path: String,
    pub class_id: usize,
    pub eow: bool,
    pub page: String,
    pub line: usize,
    pub word: usize,
    pub char: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_counts: BTreeMap<usize, usize>,
    pub words_aligned: usize,
    pub words_discarded: usize,
    /// Lines whose word count differed from the text.
    pub lines_skipped: usize,
    pub pages_skipped: Vec<String>,
}

impl DatasetManifest {
    pub fn discard_rate(&self) -> Option<f64> {
        (self.words_aligned > 0).then(|| self.words_discarded as f64 / self.words_aligned as f64)
    }

    fn recount(&mut self) {
        self.class_counts.clear();
        for e in &self.entries {
            *self.class_counts.entry(e.class_id).or_default() += 1;
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("path\tclass_id\teow\tpage\tline\tword\tchar\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.path,
                e.class_id,
                u8::from(e.eow),
                e.page,
                e.line,
                e.word,
                e.char
            ));
        }
        s
    }

    pub fn parse_tsv(text: &str) -> Result<Vec<ManifestEntry>> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != "path\tclass_id\teow\tpage\tline\tword\tchar" {
            return Err(OcrError::invalid(format!("unexpected manifest header {header:?}")));
        }
        lines
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                let bad = || OcrError::invalid(format!("manifest row {}: {l:?}", i + 2));
                let f: Vec<&str> = l.split('\t').collect();
                if f.len() != 7 {
                    return Err(bad());
                }
                let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
                Ok(ManifestEntry {
                    path: f[0].to_string(),
                    class_id: num(f[1])?,
                    eow: match f[2] {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad()),
                    },
                    page: f[3].to_string(),
                    line: num(f[4])?,
                    word: num(f[5])?,
                    char: num(f[6])?,
                })
            })
            .collect()
    }
}

/// Samples harvested from one page.
struct PageHarvest {
    entries: Vec<(ManifestEntry, Vec<f32>)>,
    words_aligned: usize,
    words_discarded: usize,
    lines_skipped: usize,
}

fn harvest_page(page: &CorpusPage, cfg: &SegmenterConfig, map: &ClassMap) -> Result<PageHarvest> {
    let truth = page.read_truth()?;
    let gray = load_gray(&page.image)?;
    let seg = segment_page(&gray, cfg)?;
    let lines = pair_lines(&seg, &truth)?;
    let mut out = PageHarvest {
        entries: Vec::new(),
        words_aligned: 0,
        words_discarded: 0,
        lines_skipped: 0,
    };
    for (li, (line, lt)) in seg.lines.into_iter().zip(lines).enumerate() {
        if !lt.words_match {
            log::info!(
                "{} line {li}: {} word(s) found, text has {}",
                page.id,
                line.words.len(),
                lt.tokens.len()
            );
            out.lines_skipped += 1;
            continue;
        }
        for (wi, (w, token)) in line.words.into_iter().zip(&lt.tokens).enumerate() {
            let aligned = align(w.segmented, token, map)?;
            out.words_aligned += 1;
            if aligned.status == AlignStatus::Discarded {
                out.words_discarded += 1;
                continue;
            }
            let last = aligned.truth.len() - 1;
            for (ci, (pc, label)) in aligned.pairs().enumerate() {
                let pixels = normalize_glyph(&pc.raster)?;
                let entry = ManifestEntry {
                    path: format!("samples/{}_l{li:02}_w{wi:02}_c{ci:02}.pgm", page.id),
                    class_id: label,
                    eow: ci == last,
                    page: page.id.clone(),
                    line: li,
                    word: wi,
                    char: ci,
                };
                out.entries.push((entry, pixels));
            }
        }
    }
    Ok(out)
}

/// Binary PGM, ink black.
fn glyph_pgm(pixels: &[f32]) -> Vec<u8> {
    let mut out = format!("P5\n{GLYPH_SIDE} {GLYPH_SIDE}\n255\n").into_bytes();
    out.extend(pixels.iter().map(|&p| if p > 0.5 { 0u8 } else { 255 }));
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| OcrError::io(path, e))
}

/// Segments every page, aligns words with their text and writes the
/// accepted glyphs, the TSV manifest, a packed copy of the samples and a
/// JSON summary into `out_dir`.
///
/// Pages whose line count differs from their text are skipped with a
/// warning, as are single lines whose word count differs.
pub fn build_dataset(
    pages: &[CorpusPage],
    cfg: &SegmenterConfig,
    map: &ClassMap,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    let samples_dir = out_dir.join("samples");
    fs::create_dir_all(&samples_dir).map_err(|e| OcrError::io(&samples_dir, e))?;

    let results: Vec<Result<PageHarvest>> = pages.par_iter().map(|p| harvest_page(p, cfg, map)).collect();
    let mut manifest = DatasetManifest::default();
    let mut samples = Vec::new();
    for (page, res) in pages.iter().zip(results) {
        match res {
            Ok(h) => {
                manifest.words_aligned += h.words_aligned;
                manifest.words_discarded += h.words_discarded;
                manifest.lines_skipped += h.lines_skipped;
                for (e, px) in h.entries {
                    samples.push(GlyphSample {
                        pixels: px,
                        label: e.class_id,
                        eow: e.eow,
                    });
                    manifest.entries.push(e);
                }
            }
            Err(e @ OcrError::PageMismatch(_)) => {
                log::warn!("{}: {e}", page.id);
                manifest.pages_skipped.push(page.id.clone());
            }
            Err(e) => return Err(e),
        }
    }
    manifest.recount();

    manifest
        .entries
        .par_iter()
        .zip(&samples)
        .try_for_each(|(e, s)| write_file(&out_dir.join(&e.path), &glyph_pgm(&s.pixels)))?;
    write_file(&out_dir.join(MANIFEST_FILE), manifest.to_tsv().as_bytes())?;
    write_file(&out_dir.join(PACKED_FILE), &pack_samples(&samples))?;
    let summary = serde_json::json!({
        "samples": manifest.entries.len(),
        "class_counts": manifest.class_counts,
        "words_aligned": manifest.words_aligned,
        "words_discarded": manifest.words_discarded,
        "discard_rate": manifest.discard_rate(),
        "lines_skipped": manifest.lines_skipped,
        "pages_skipped": manifest.pages_skipped,
    });
    write_file(&out_dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(manifest)
}

/// `"AGLY" u32:count` then per sample `u16:label u8:eow` and the 576 pixels
/// packed eight to a byte, most significant bit first.
pub fn pack_samples(samples: &[GlyphSample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + samples.len() * (3 + GLYPH_DIM / 8));
    out.extend(PACKED_MAGIC);
    out.extend((samples.len() as u32).to_le_bytes());
    for s in samples {
        out.extend((s.label as u16).to_le_bytes());
        out.push(u8::from(s.eow));
        for chunk in s.pixels.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |b, (i, &p)| if p > 0.5 { b | (0x80 >> i) } else { b });
            out.push(byte);
        }
    }
    out
}

pub fn unpack_samples(bytes: &[u8]) -> Result<Vec<GlyphSample>> {
    let bad = || OcrError::invalid("malformed packed sample file");
    if bytes.get(..4) != Some(PACKED_MAGIC.as_slice()) || bytes.len() < 8 {
        return Err(bad());
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let rec = 3 + GLYPH_DIM / 8;
    if bytes.len() != 8 + n * rec {
        return Err(bad());
    }
    Ok(bytes[8..]
        .chunks_exact(rec)
        .map(|r| GlyphSample {
            label: u16::from_le_bytes([r[0], r[1]]) as usize,
            eow: r[2] == 1,
            pixels: (0..GLYPH_DIM).map(|i| f32::from(r[3 + i / 8] >> (7 - i % 8) & 1)).collect(),
        })
        .collect())
}

/// Loads a dataset directory, preferring the packed copy and falling back to
/// the manifest and its PGM files.
pub fn load_samples(dir: impl AsRef<Path>) -> Result<Vec<GlyphSample>> {
    let dir = dir.as_ref();
    let packed = dir.join(PACKED_FILE);
    if packed.exists() {
        let bytes = fs::read(&packed).map_err(|e| OcrError::io(&packed, e))?;
        return unpack_samples(&bytes);
    }
    load_manifest_samples(dir)
}

/// Loads samples through the TSV manifest and the individual PGM files.
pub fn load_manifest_samples(dir: impl AsRef<Path>) -> Result<Vec<GlyphSample>> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| OcrError::io(&path, e))?;
    DatasetManifest::parse_tsv(&text)?
        .into_iter()
        .map(|e| {
            let img = load_gray(dir.join(&e.path))?;
            if img.width() != GLYPH_SIDE || img.height() != GLYPH_SIDE {
                return Err(OcrError::invalid(format!("{}: not a {GLYPH_SIDE}x{GLYPH_SIDE} glyph", e.path)));
            }
            Ok(GlyphSample {
                pixels: img.data().iter().map(|&v| f32::from(v < 128)).collect(),
                label: e.class_id,
                eow: e.eow,
            })
        })
        .collect()
}
