//! Count-based segmentation accuracies, edit distance and the evaluation
//! report.
//!
//! The segmentation metrics compare counts, not positions: a line with one
//! word split in two and two words fused into one scores as fully correct.
//! That mirrors how the accuracies are conventionally reported for this
//! family of segmenters, so the report carries a footnote saying so.

use std::fmt;
use std::time::Duration;

use serde::Serialize;

use crate::error::{OcrError, Result};

/// Σ max(0, t − |t − p|) / Σ t over aligned (predicted, truth) pairs.
fn count_accuracy(pairs: impl IntoIterator<Item = (usize, usize)>, what: &str) -> Result<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for (pred, truth) in pairs {
        correct += truth.saturating_sub(pred.abs_diff(truth));
        total += truth;
    }
    if total == 0 {
        return Err(OcrError::UndefinedMetric(format!("no truth {what}")));
    }
    Ok(correct as f64 / total as f64)
}

/// Per-line word counts against the truth.
pub fn word_seg_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(OcrError::invalid(format!(
            "{} predicted lines vs {} truth lines",
            predicted.len(),
            truth.len()
        )));
    }
    count_accuracy(predicted.iter().copied().zip(truth.iter().copied()), "words")
}

/// Per-word character counts against truth letter counts, floored at 0.
pub fn char_seg_accuracy(segmented: &[usize], truth: &[usize]) -> Result<f64> {
    if segmented.len() != truth.len() {
        return Err(OcrError::invalid(format!(
            "{} segmented words vs {} truth words",
            segmented.len(),
            truth.len()
        )));
    }
    let total: usize = truth.iter().sum();
    if total == 0 {
        return Err(OcrError::UndefinedMetric("no truth characters".into()));
    }
    let wrong: usize = segmented.iter().zip(truth).map(|(s, t)| s.abs_diff(*t)).sum();
    Ok(total.saturating_sub(wrong) as f64 / total as f64)
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Collapses whitespace runs inside each line to one space and trims lines.
pub fn normalize_whitespace(text: &str) -> String {
    let lines: Vec<String> = text
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect();
    let mut out = lines.join("\n");
    out.truncate(out.trim_end().len());
    out
}

/// 1 − distance / len(truth) on whitespace-normalized text, clamped to [0, 1].
pub fn overall_accuracy(output: &str, truth: &str) -> Result<f64> {
    let truth = normalize_whitespace(truth);
    let output = normalize_whitespace(output);
    let n = truth.chars().count();
    if n == 0 {
        return Err(OcrError::UndefinedMetric("empty truth document".into()));
    }
    let d = levenshtein(&output, &truth);
    Ok((1.0 - d as f64 / n as f64).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub word_seg_acc: Option<f64>,
    pub char_seg_acc: Option<f64>,
    pub recognition_acc: Option<f64>,
    pub overall_acc: Option<f64>,
    pub words_evaluated: usize,
    pub chars_evaluated: usize,
    /// Seconds per 550 words, excluding model load.
    pub seconds_per_550_words: Option<f64>,
}

impl EvalReport {
    pub fn set_timing(&mut self, elapsed: Duration, words: usize) {
        if words > 0 {
            self.seconds_per_550_words = Some(elapsed.as_secs_f64() * 550.0 / words as f64);
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.2}%", v * 100.0));
        writeln!(f, "{:<28}{:>10}", "metric", "value")?;
        writeln!(f, "{:<28}{:>10}", "word segmentation*", pct(self.word_seg_acc))?;
        writeln!(f, "{:<28}{:>10}", "character segmentation*", pct(self.char_seg_acc))?;
        writeln!(f, "{:<28}{:>10}", "recognition", pct(self.recognition_acc))?;
        writeln!(f, "{:<28}{:>10}", "overall (edit distance)", pct(self.overall_acc))?;
        writeln!(f, "{:<28}{:>10}", "words evaluated", self.words_evaluated)?;
        writeln!(f, "{:<28}{:>10}", "characters evaluated", self.chars_evaluated)?;
        if let Some(s) = self.seconds_per_550_words {
            writeln!(f, "{:<28}{:>9.3}s", "time / 550 words", s)?;
        }
        write!(f, "* count based: offsetting split and merge errors cancel out")
    }
}
