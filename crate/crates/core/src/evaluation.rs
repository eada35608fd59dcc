//! Corpus-level evaluation: runs the pipeline over pages with known text
//! and fills an [`EvalReport`].

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::assembly::{assemble, PredictedChar};
use crate::classmap::ClassMap;
use crate::dataset::{align, pair_lines, AlignStatus, CorpusPage};
use crate::error::{OcrError, Result};
use crate::metrics::{char_seg_accuracy, levenshtein, normalize_whitespace, word_seg_accuracy, EvalReport};
use crate::pipeline::{recognize_page, segment_page, SegmenterConfig};
use crate::raster::load_gray;
use crate::recognition::Classifier;

/// Per-page tallies, merged in page order.
#[derive(Clone, Debug, Default)]
pub struct PageEval {
    pub id: String,
    /// Per-line (predicted, truth) word counts; empty when the page's line
    /// count did not match its text.
    pub word_counts: Vec<(usize, usize)>,
    /// Per-word (segmented, truth) character counts on lines whose word
    /// counts match.
    pub char_counts: Vec<(usize, usize)>,
    pub recognized: usize,
    pub recognized_correct: usize,
    pub output: Option<String>,
    pub chars: Vec<PredictedChar>,
    pub truth: String,
    pub edit_distance: usize,
    pub elapsed: Duration,
    pub skipped: Option<String>,
}

fn evaluate_page(
    page: &CorpusPage,
    index: usize,
    cfg: &SegmenterConfig,
    map: &ClassMap,
    clf: Option<&Classifier>,
) -> Result<PageEval> {
    let truth_raw = page.read_truth()?;
    let gray = load_gray(&page.image)?;
    let t0 = Instant::now();
    let seg = segment_page(&gray, cfg)?;
    let chars = match clf {
        Some(c) => Some(recognize_page(&seg, c, index)?),
        None => None,
    };
    let elapsed = t0.elapsed();

    let mut ev = PageEval {
        id: page.id.clone(),
        truth: normalize_whitespace(&map.normalize_document(&truth_raw)?),
        elapsed,
        ..PageEval::default()
    };
    if let Some(chars) = chars {
        let text = normalize_whitespace(&assemble(&chars, map).text);
        ev.edit_distance = levenshtein(&text, &ev.truth);
        ev.output = Some(text);
        ev.chars = chars;
    }

    let lines = match pair_lines(&seg, &truth_raw) {
        Ok(l) => l,
        Err(e @ OcrError::PageMismatch(_)) => {
            log::warn!("{}: {e}", page.id);
            ev.skipped = Some(e.to_string());
            return Ok(ev);
        }
        Err(e) => return Err(e),
    };
    for (li, (line, lt)) in seg.lines.iter().zip(&lines).enumerate() {
        ev.word_counts.push((line.words.len(), lt.tokens.len()));
        if !lt.words_match {
            continue;
        }
        for (wi, (w, token)) in line.words.iter().zip(&lt.tokens).enumerate() {
            let aligned = align(w.segmented.clone(), token, map)?;
            ev.char_counts.push((aligned.segmented.len(), aligned.truth.len()));
            if aligned.status != AlignStatus::Accepted || ev.output.is_none() {
                continue;
            }
            for (ci, (_, label)) in aligned.pairs().enumerate() {
                let pred = ev
                    .chars
                    .iter()
                    .find(|c| c.provenance.line == li && c.provenance.word == wi && c.provenance.char == ci);
                ev.recognized += 1;
                ev.recognized_correct += usize::from(pred.is_some_and(|p| p.class_id == label));
            }
        }
    }
    Ok(ev)
}

/// Evaluates every page in parallel on the current rayon pool. Without a
/// classifier only the segmentation metrics are filled.
pub fn evaluate_corpus(
    pages: &[CorpusPage],
    cfg: &SegmenterConfig,
    map: &ClassMap,
    clf: Option<&Classifier>,
) -> Result<(EvalReport, Vec<PageEval>)> {
    let t0 = Instant::now();
    let evals: Vec<PageEval> = pages
        .par_iter()
        .enumerate()
        .map(|(i, p)| evaluate_page(p, i, cfg, map, clf))
        .collect::<Result<_>>()?;
    let wall = t0.elapsed();

    let (pred, truth): (Vec<usize>, Vec<usize>) = evals.iter().flat_map(|e| e.word_counts.iter().copied()).unzip();
    let (seg, letters): (Vec<usize>, Vec<usize>) = evals.iter().flat_map(|e| e.char_counts.iter().copied()).unzip();
    let mut report = EvalReport {
        words_evaluated: truth.iter().sum(),
        chars_evaluated: letters.iter().sum(),
        word_seg_acc: word_seg_accuracy(&pred, &truth).ok(),
        char_seg_acc: char_seg_accuracy(&seg, &letters).ok(),
        ..EvalReport::default()
    };
    if clf.is_some() {
        let (n, ok) = evals.iter().fold((0, 0), |(n, ok), e| (n + e.recognized, ok + e.recognized_correct));
        report.recognition_acc = (n > 0).then(|| ok as f64 / n as f64);
        let dist: usize = evals.iter().map(|e| e.edit_distance).sum();
        let len: usize = evals.iter().map(|e| e.truth.chars().count()).sum();
        report.overall_acc = (len > 0).then(|| (1.0 - dist as f64 / len as f64).clamp(0.0, 1.0));
    }
    // Sequential runs time the pipeline alone; parallel runs can only be
    // timed by the wall clock.
    let busy: Duration = evals.iter().map(|e| e.elapsed).sum();
    let elapsed = if rayon::current_num_threads() == 1 { busy } else { wall };
    report.set_timing(elapsed, report.words_evaluated);
    Ok((report, evals))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BenchReport {
    pub pages: usize,
    pub words: usize,
    pub threads: usize,
    pub seconds: f64,
    pub seconds_per_550_words: f64,
}

/// Times segmentation, and recognition when a classifier is given, over
/// preloaded pages on the current rayon pool. Image decoding is excluded.
pub fn bench(pages: &[CorpusPage], cfg: &SegmenterConfig, clf: Option<&Classifier>) -> Result<BenchReport> {
    let images = pages.iter().map(|p| load_gray(&p.image)).collect::<Result<Vec<_>>>()?;
    let t0 = Instant::now();
    let words: Vec<usize> = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let seg = segment_page(img, cfg)?;
            if let Some(c) = clf {
                recognize_page(&seg, c, i)?;
            }
            Ok(seg.word_count())
        })
        .collect::<Result<_>>()?;
    let seconds = t0.elapsed().as_secs_f64();
    let words: usize = words.iter().sum();
    Ok(BenchReport {
        pages: pages.len(),
        words,
        threads: rayon::current_num_threads(),
        seconds,
        seconds_per_550_words: if words > 0 { seconds * 550.0 / words as f64 } else { 0.0 },
    })
}
