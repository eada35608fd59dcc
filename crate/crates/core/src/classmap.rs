//! Mapping between recognizer class ids and text.
//!
//! The class map is data, not code: it lists the output string of every
//! class, the characters stripped before counting letters (tashkeel,
//! tatweel) and the folds applied to letter variants. Text is first put in
//! compatibility-decomposed form, which turns presentation forms into base
//! letters and splits hamza-carrying letters into base + combining hamza.
//!
//! Tokenization is greedy longest-match over the class strings, so adding a
//! two-letter class such as lam-alef switches the ligature policy from "two
//! letters" to "one class" without code changes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{OcrError, Result};

pub const DEFAULT_CLASSES: [&str; 29] = [
    "ا", "ب", "ت", "ث", "ج", "ح", "خ", "د", "ذ", "ر", "ز", "س", "ش", "ص", "ض", "ط", "ظ", "ع", "غ",
    "ف", "ق", "ك", "ل", "م", "ن", "ه", "و", "ي", "ء",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap {
    /// Output string per class id.
    pub classes: Vec<String>,
    /// Character replacements applied after decomposition and stripping.
    #[serde(default)]
    pub fold: BTreeMap<char, String>,
    /// Characters removed before counting.
    #[serde(default)]
    pub strip: Vec<char>,
}

impl Default for ClassMap {
    fn default() -> Self {
        let mut strip: Vec<char> = ('\u{064B}'..='\u{0655}').collect();
        strip.extend(['\u{0640}', '\u{0670}']);
        let fold = [('ى', "ي"), ('ة', "ه"), ('ٱ', "ا")]
            .into_iter()
            .map(|(c, s)| (c, s.to_string()))
            .collect();
        Self {
            classes: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect(),
            fold,
            strip,
        }
    }
}

impl ClassMap {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_str(&self, id: usize) -> Option<&str> {
        self.classes.get(id).map(String::as_str)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| OcrError::io(path, e))?;
        let map: ClassMap = serde_json::from_str(&text)?;
        if map.classes.is_empty() || map.classes.iter().any(String::is_empty) {
            return Err(OcrError::Config(format!("{}: empty class entry", path.display())));
        }
        Ok(map)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| OcrError::io(path, e))
    }

    /// Decomposes, strips and folds a string, keeping whitespace.
    pub fn normalize(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        for c in text.nfkd() {
            if self.strip.contains(&c) {
                continue;
            }
            match self.fold.get(&c) {
                Some(rep) => out.push_str(rep),
                None => out.push(c),
            }
        }
        out
    }

    /// Class ids of one word in reading order.
    pub fn encode_word(&self, word: &str) -> Result<Vec<usize>> {
        let norm = self.normalize(word);
        let mut ids = Vec::new();
        let mut rest = norm.as_str();
        while let Some(c) = rest.chars().next() {
            if c.is_whitespace() {
                rest = &rest[c.len_utf8()..];
                continue;
            }
            let best = self
                .classes
                .iter()
                .enumerate()
                .filter(|(_, s)| rest.starts_with(s.as_str()))
                .max_by_key(|(i, s)| (s.len(), std::cmp::Reverse(*i)));
            match best {
                Some((id, s)) => {
                    ids.push(id);
                    rest = &rest[s.len()..];
                }
                None => return Err(OcrError::UnmappableCharacter { ch: c }),
            }
        }
        Ok(ids)
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .map(|&id| self.class_str(id).unwrap_or("\u{FFFD}"))
            .collect()
    }

    /// Canonical form of a document: every word re-spelled from its class
    /// ids, single spaces between words, one line per input line.
    pub fn normalize_document(&self, text: &str) -> Result<String> {
        let mut lines = Vec::new();
        for line in text.lines() {
            let words: Vec<String> = line
                .split_whitespace()
                .map(|w| self.encode_word(w).map(|ids| self.decode(&ids)))
                .collect::<Result<_>>()?;
            lines.push(words.join(" "));
        }
        Ok(lines.join("\n"))
    }
}
