//! Turns classified characters into text: a space after every end-of-word
//! character, a newline between lines.

use serde::Serialize;

use crate::classmap::ClassMap;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Provenance {
    pub page: usize,
    pub line: usize,
    pub word: usize,
    /// Reading order inside the word.
    pub char: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictedChar {
    pub class_id: usize,
    pub confidence: f64,
    pub eow: bool,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Document {
    pub text: String,
}

/// Concatenates characters in the given order. A space follows each EOW
/// character unless it ends its line; a change of (page, line) starts a new
/// line. Unknown class ids become U+FFFD.
pub fn assemble(chars: &[PredictedChar], map: &ClassMap) -> Document {
    let mut text = String::new();
    let mut pending_space = false;
    let mut current: Option<(usize, usize)> = None;
    for c in chars {
        let key = (c.provenance.page, c.provenance.line);
        if current.is_some_and(|k| k != key) {
            text.push('\n');
            pending_space = false;
        }
        current = Some(key);
        if pending_space {
            text.push(' ');
        }
        match map.class_str(c.class_id) {
            Some(s) => text.push_str(s),
            None => {
                log::warn!("class id {} outside the class map at {:?}", c.class_id, c.provenance);
                text.push('\u{FFFD}');
            }
        }
        pending_space = c.eow;
    }
    Document { text }
}

/// JSON with the text and every character's class, confidence and position.
pub fn to_json(doc: &Document, chars: &[PredictedChar], map: &ClassMap) -> serde_json::Value {
    let chars: Vec<serde_json::Value> = chars
        .iter()
        .map(|c| {
            serde_json::json!({
                "text": map.class_str(c.class_id).unwrap_or("\u{FFFD}"),
                "class_id": c.class_id,
                "confidence": c.confidence,
                "eow": c.eow,
                "page": c.provenance.page,
                "line": c.provenance.line,
                "word": c.provenance.word,
                "char": c.provenance.char,
            })
        })
        .collect();
    serde_json::json!({ "text": doc.text, "characters": chars })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ch(map: &ClassMap, s: &str, eow: bool, line: usize) -> PredictedChar {
        PredictedChar {
            class_id: map.classes.iter().position(|c| c == s).unwrap(),
            confidence: 1.0,
            eow,
            provenance: Provenance {
                line,
                ..Provenance::default()
            },
        }
    }

    #[test]
    fn eow_flags_place_spaces() {
        let map = ClassMap::default();
        let chars = [
            ch(&map, "س", false, 0),
            ch(&map, "ي", false, 0),
            ch(&map, "ف", true, 0),
            ch(&map, "م", false, 0),
            ch(&map, "ن", true, 0),
        ];
        assert_eq!(assemble(&chars, &map).text, "سيف من");
    }

    #[test]
    fn lines_break_without_trailing_space() {
        let map = ClassMap::default();
        let chars = [ch(&map, "ب", true, 0), ch(&map, "ت", true, 1), ch(&map, "ث", true, 1)];
        assert_eq!(assemble(&chars, &map).text, "ب\nت ث");
    }

    #[test]
    fn empty_and_unknown() {
        let map = ClassMap::default();
        assert_eq!(assemble(&[], &map).text, "");
        let mut c = ch(&map, "ب", true, 0);
        c.class_id = 99;
        assert_eq!(assemble(&[c], &map).text, "\u{FFFD}");
        let json = to_json(&assemble(&[c], &map), &[c], &map);
        assert_eq!(json["characters"][0]["class_id"], 99);
    }

    proptest! {
        #[test]
        fn word_count_follows_eow_flags(
            flags in prop::collection::vec((0usize..29, any::<bool>(), 0usize..3), 0..60)
        ) {
            let map = ClassMap::default();
            let mut chars: Vec<PredictedChar> = flags
                .iter()
                .map(|&(id, eow, line)| PredictedChar {
                    class_id: id,
                    confidence: 0.5,
                    eow,
                    provenance: Provenance { line, ..Provenance::default() },
                })
                .collect();
            chars.sort_by_key(|c| c.provenance.line);
            // Close every line with an EOW character, as the pipeline does.
            for i in 0..chars.len() {
                if i + 1 == chars.len() || chars[i + 1].provenance.line != chars[i].provenance.line {
                    chars[i].eow = true;
                }
            }
            let text = assemble(&chars, &map).text;
            let lines: Vec<&str> = if text.is_empty() { vec![] } else { text.split('\n').collect() };
            let mut line_ids: Vec<usize> = chars.iter().map(|c| c.provenance.line).collect();
            line_ids.dedup();
            prop_assert_eq!(lines.len(), line_ids.len());
            for (l, id) in lines.iter().zip(line_ids) {
                let eows = chars.iter().filter(|c| c.provenance.line == id && c.eow).count();
                prop_assert_eq!(l.split(' ').count(), eows);
                prop_assert!(!l.ends_with(' ') && !l.contains("  "));
            }
            let spaces = text.matches(' ').count();
            let newlines = text.matches('\n').count();
            prop_assert_eq!(text.chars().count(), chars.len() + spaces + newlines);
        }
    }
}
