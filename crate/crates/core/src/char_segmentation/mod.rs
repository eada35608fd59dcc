//! Character segmentation: excessive cut creation (ECC) followed by improved
//! cut filtration (ICF).
//!
//! ECC proposes at most one cut per potential cut region: the first column,
//! scanning from the region's left end toward its right end, whose only ink
//! lies on the baseline band; failing that, the region's middle column when
//! the ink on either side of the region is not 8-connected.
//!
//! ICF then merges potential characters (the spans between successive cuts)
//! in three passes whose order matters:
//!
//! 1. seen/sheen: seen-stroke, then seen- or sheen-stroke, then seen-stroke
//!    or bowl are merged into one character;
//! 2. saad/daad: a saad-stroke or a bowl right after a hole-bearing PC joins
//!    that PC;
//! 3. end stroke: a short final stroke of baa/taa/thaa/faa joins the PC
//!    before it;
//! 4. lead-in: a word's first PC that is only an entry hook on the
//!    baseline joins the PC after it.

mod shapes;
mod trace;

pub use shapes::{classify_pc, PcGeometry, ShapeContext, ShapeFacts, ShapeThresholds};
pub use trace::{save_cut_overlay, CutDecision, MergeRecord, PcrTrace, SegmentationTrace};

use serde::Serialize;

use crate::components::label_ink;
use crate::raster::BinaryImage;
use crate::word_features::WordFeatures;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Baseline,
    Separation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Cut {
    pub column: usize,
    pub kind: CutKind,
    /// Right-to-left order index of the region the cut came from.
    pub source_pcr: usize,
}

#[derive(Clone, Debug)]
pub struct PotentialCharacter {
    /// Inclusive column span inside the word raster.
    pub lo: usize,
    pub hi: usize,
    pub right_cut: Option<usize>,
    pub left_cut: Option<usize>,
    /// Number of ECC potential characters merged into this one.
    pub parts: usize,
    pub facts: ShapeFacts,
    /// Full word height, columns `lo..=hi`.
    pub raster: BinaryImage,
}

#[derive(Clone, Debug)]
pub struct SegmentedWord {
    /// Right to left.
    pub characters: Vec<PotentialCharacter>,
}

impl SegmentedWord {
    /// Index of the end-of-word character, the leftmost one.
    pub fn eow_index(&self) -> Option<usize> {
        self.characters.len().checked_sub(1)
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPass {
    SeenSheen,
    SaadDaad,
    EndStroke,
    LeadIn,
}

/// Filtration order used by [`icf`].
pub const FILTER_ORDER: [FilterPass; 4] = [
    FilterPass::SeenSheen,
    FilterPass::SaadDaad,
    FilterPass::EndStroke,
    FilterPass::LeadIn,
];

/// Excessive cut creation. Returns cuts ordered right to left.
pub fn ecc(word: &BinaryImage, f: &WordFeatures, cfg: &ShapeThresholds) -> Vec<Cut> {
    ecc_traced(word, f, cfg).0
}

pub fn ecc_traced(
    word: &BinaryImage,
    f: &WordFeatures,
    cfg: &ShapeThresholds,
) -> (Vec<Cut>, Vec<PcrTrace>) {
    let h = word.height();
    let (band_lo, band_hi) = shapes::band(f, cfg, h);
    let off_baseline = |x: usize| (0..h).any(|y| (y < band_lo || y > band_hi) && word.get(x, y));
    let labels = (!f.pcrs.is_empty()).then(|| label_ink(word));

    let mut cuts = Vec::new();
    let mut traces = Vec::new();
    for pcr in &f.pcrs {
        let decision = if let Some(x) = (pcr.end..=pcr.start).find(|&x| !off_baseline(x)) {
            cuts.push(Cut {
                column: x,
                kind: CutKind::Baseline,
                source_pcr: pcr.order,
            });
            CutDecision::Baseline { column: x }
        } else {
            let labels = labels.as_ref().expect("labelled when PCRs exist");
            let right = labels.at(pcr.start + 1, f.lmt_row);
            let left = labels.at(pcr.end - 1, f.lmt_row);
            if right != left {
                let column = pcr.middle();
                cuts.push(Cut {
                    column,
                    kind: CutKind::Separation,
                    source_pcr: pcr.order,
                });
                CutDecision::Separation { column }
            } else {
                CutDecision::None
            }
        };
        traces.push(PcrTrace {
            order: pcr.order,
            start: pcr.start,
            end: pcr.end,
            decision,
        });
    }
    (cuts, traces)
}

/// Builds the potential characters delimited by `cuts` (right to left).
///
/// A cut column is the rightmost column of the potential character to its
/// left.
pub fn potential_characters(
    word: &BinaryImage,
    cuts: &[Cut],
    f: &WordFeatures,
    cfg: &ShapeThresholds,
) -> Vec<PotentialCharacter> {
    let mut cols: Vec<usize> = cuts.iter().map(|c| c.column).collect();
    cols.sort_unstable_by(|a, b| b.cmp(a));
    cols.dedup();
    let w = word.width();
    let mut pcs = Vec::with_capacity(cols.len() + 1);
    let mut hi = w - 1;
    let mut right_cut = None;
    for &c in &cols {
        if c >= hi {
            continue;
        }
        pcs.push(make_pc(word, c + 1, hi, right_cut, Some(c), 1, f, cfg));
        hi = c;
        right_cut = Some(c);
    }
    pcs.push(make_pc(word, 0, hi, right_cut, None, 1, f, cfg));
    pcs
}

#[allow(clippy::too_many_arguments)]
fn make_pc(
    word: &BinaryImage,
    lo: usize,
    hi: usize,
    right_cut: Option<usize>,
    left_cut: Option<usize>,
    parts: usize,
    f: &WordFeatures,
    cfg: &ShapeThresholds,
) -> PotentialCharacter {
    let geo = PcGeometry {
        lo,
        hi,
        right_cut,
        left_cut,
    };
    PotentialCharacter {
        lo,
        hi,
        right_cut,
        left_cut,
        parts,
        facts: classify_pc(word, &geo, f, cfg),
        raster: word.crop(lo, 0, hi, word.height() - 1),
    }
}

/// Merges `pcs[first..=last]` (right-to-left indices) into one.
fn merge(
    pcs: &mut Vec<PotentialCharacter>,
    first: usize,
    last: usize,
    word: &BinaryImage,
    f: &WordFeatures,
    cfg: &ShapeThresholds,
) {
    let parts = pcs[first..=last].iter().map(|p| p.parts).sum();
    let merged = make_pc(
        word,
        pcs[last].lo,
        pcs[first].hi,
        pcs[first].right_cut,
        pcs[last].left_cut,
        parts,
        f,
        cfg,
    );
    pcs.splice(first..=last, std::iter::once(merged));
}

struct Rules<'a> {
    ctx: ShapeContext<'a>,
}

impl Rules<'_> {
    fn single(pc: &PotentialCharacter) -> bool {
        pc.parts == 1
    }
    fn seen(&self, pc: &PotentialCharacter) -> bool {
        Self::single(pc) && self.ctx.is_seen_stroke(&pc.facts)
    }
    fn sheen(&self, pc: &PotentialCharacter) -> bool {
        Self::single(pc) && self.ctx.is_sheen_stroke(&pc.facts)
    }
    /// Three teeth spread over fewer PCs because a cut was missed, usually
    /// under the dots of sheen: stroke PCs starting at `i`, optionally
    /// closed by a bowl, adding up to exactly three teeth. Returns the last
    /// PC of the run.
    fn undercut_seen(&self, pcs: &[PotentialCharacter], i: usize) -> Option<usize> {
        let mut teeth = 0;
        let mut undercut = false;
        for (j, pc) in pcs.iter().enumerate().skip(i) {
            if self.seen(pc) || self.sheen(pc) {
                teeth += pc.facts.teeth.max(1);
                undercut |= pc.facts.teeth > 1;
            } else if j > i && self.bowl(pc) {
                teeth += 1;
            } else {
                return None;
            }
            if teeth >= 3 {
                return (teeth == 3 && undercut && j > i).then_some(j);
            }
        }
        None
    }
    fn bowl(&self, pc: &PotentialCharacter) -> bool {
        Self::single(pc) && self.ctx.is_bowl(&pc.facts)
    }
    fn saad(&self, pc: &PotentialCharacter) -> bool {
        Self::single(pc) && self.ctx.is_saad_stroke(&pc.facts)
    }
    fn end_stroke(&self, pc: &PotentialCharacter) -> bool {
        Self::single(pc) && self.ctx.is_end_stroke(&pc.facts)
    }
    fn lead_in(&self, pc: &PotentialCharacter) -> bool {
        Self::single(pc) && pc.right_cut.is_none() && pc.left_cut.is_some() && self.ctx.is_lead_in(&pc.facts)
    }
}

/// Improved cut filtration with the standard pass order.
pub fn icf(word: &BinaryImage, cuts: &[Cut], f: &WordFeatures, cfg: &ShapeThresholds) -> SegmentedWord {
    icf_with_order(word, cuts, f, cfg, &FILTER_ORDER).0
}

/// Improved cut filtration with an explicit pass order, returning the merge
/// log alongside the result.
pub fn icf_with_order(
    word: &BinaryImage,
    cuts: &[Cut],
    f: &WordFeatures,
    cfg: &ShapeThresholds,
    order: &[FilterPass],
) -> (SegmentedWord, Vec<MergeRecord>) {
    let mut pcs = potential_characters(word, cuts, f, cfg);
    let rules = Rules {
        ctx: ShapeContext {
            cfg,
            ascender: f.ascender,
            band_above: cfg.baseline_band.max(f.pen.above),
        },
    };
    let mut log = Vec::new();
    let mut record = |pass: FilterPass, pcs: &[PotentialCharacter], first: usize, last: usize| {
        log.push(MergeRecord {
            pass,
            removed_cuts: pcs[first + 1..=last]
                .iter()
                .filter_map(|p| p.right_cut)
                .collect(),
            span: (pcs[last].lo, pcs[first].hi),
        });
    };

    for pass in order {
        match pass {
            FilterPass::SeenSheen => {
                let mut i = 0;
                while i + 1 < pcs.len() {
                    let hit = i + 2 < pcs.len()
                        && rules.seen(&pcs[i])
                        && (rules.seen(&pcs[i + 1]) || rules.sheen(&pcs[i + 1]))
                        && (rules.seen(&pcs[i + 2]) || rules.bowl(&pcs[i + 2]));
                    if hit {
                        record(*pass, &pcs, i, i + 2);
                        merge(&mut pcs, i, i + 2, word, f, cfg);
                    } else if let Some(last) = rules.undercut_seen(&pcs, i) {
                        record(*pass, &pcs, i, last);
                        merge(&mut pcs, i, last, word, f, cfg);
                    }
                    i += 1;
                }
            }
            FilterPass::SaadDaad => {
                let mut i = 1;
                while i < pcs.len() {
                    let hit = (rules.saad(&pcs[i]) || rules.bowl(&pcs[i])) && pcs[i - 1].facts.has_hole;
                    if hit {
                        record(*pass, &pcs, i - 1, i);
                        merge(&mut pcs, i - 1, i, word, f, cfg);
                    } else {
                        i += 1;
                    }
                }
            }
            FilterPass::EndStroke => {
                let mut i = 1;
                while i < pcs.len() {
                    if rules.end_stroke(&pcs[i]) {
                        record(*pass, &pcs, i - 1, i);
                        merge(&mut pcs, i - 1, i, word, f, cfg);
                    } else {
                        i += 1;
                    }
                }
            }
            FilterPass::LeadIn => {
                if pcs.len() > 1 && rules.lead_in(&pcs[0]) {
                    record(*pass, &pcs, 0, 1);
                    merge(&mut pcs, 0, 1, word, f, cfg);
                }
            }
        }
    }
    (SegmentedWord { characters: pcs }, log)
}

/// Full ECC + ICF on one word; words without ink yield no characters.
pub fn segment_word(word: &BinaryImage, f: &WordFeatures, cfg: &ShapeThresholds) -> SegmentedWord {
    segment_word_traced(word, f, cfg).0
}

pub fn segment_word_traced(
    word: &BinaryImage,
    f: &WordFeatures,
    cfg: &ShapeThresholds,
) -> (SegmentedWord, SegmentationTrace) {
    if word.is_empty() || word.ink_count() == 0 {
        return (
            SegmentedWord {
                characters: Vec::new(),
            },
            SegmentationTrace::default(),
        );
    }
    let (cuts, pcrs) = ecc_traced(word, f, cfg);
    let (seg, merges) = icf_with_order(word, &cuts, f, cfg, &FILTER_ORDER);
    let trace = SegmentationTrace {
        baseline_row: f.baseline_row,
        lmt_row: f.lmt_row,
        pcrs,
        cuts: cuts.clone(),
        merges,
        final_spans: seg.characters.iter().map(|c| (c.lo, c.hi)).collect(),
    };
    (seg, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word_features::{extract_pcrs, Pcr};

    fn feats(word: &BinaryImage, baseline: usize, lmt: usize, ascender: usize) -> WordFeatures {
        WordFeatures {
            baseline_row: baseline,
            lmt_row: lmt,
            ascender,
            pcrs: extract_pcrs(word, lmt),
            ..WordFeatures::default()
        }
    }

    fn strict() -> ShapeThresholds {
        ShapeThresholds {
            baseline_band: 0,
            ..ShapeThresholds::default()
        }
    }

    #[test]
    fn baseline_joined_rectangles_get_one_baseline_cut() {
        let word = BinaryImage::from_ascii(
            "
            ##....##
            ##....##
            ##....##
            ########
            ",
        )
        .unwrap();
        let f = feats(&word, 3, 1, 3);
        assert_eq!(f.pcrs, vec![Pcr { start: 5, end: 2, order: 0 }]);
        let cuts = ecc(&word, &f, &strict());
        assert_eq!(
            cuts,
            vec![Cut { column: 2, kind: CutKind::Baseline, source_pcr: 0 }]
        );
    }

    #[test]
    fn dipping_blob_gets_separation_cut() {
        // Right blob floats above the baseline (row 3); the left blob's tail
        // runs below the baseline under the whole region.
        let word = BinaryImage::from_ascii(
            "
            ##.....##
            ##.....##
            ##.....##
            ##.......
            #######..
            ",
        )
        .unwrap();
        let f = feats(&word, 3, 1, 3);
        let cuts = ecc(&word, &f, &strict());
        assert_eq!(
            cuts,
            vec![Cut { column: 4, kind: CutKind::Separation, source_pcr: 0 }]
        );
    }

    #[test]
    fn arch_inside_one_letter_gets_no_cut() {
        let word = BinaryImage::from_ascii(
            "
            ######
            #....#
            #....#
            ######
            #....#
            ",
        )
        .unwrap();
        let f = feats(&word, 3, 1, 3);
        assert_eq!(f.pcrs.len(), 1);
        assert!(ecc(&word, &f, &strict()).is_empty());
    }

    #[test]
    fn degenerate_word_is_one_character() {
        let word = BinaryImage::from_ascii("..#..\n..#..\n#####").unwrap();
        let f = feats(&word, 2, 1, 2);
        assert!(f.pcrs.is_empty());
        let seg = segment_word(&word, &f, &strict());
        assert_eq!(seg.len(), 1);
        assert_eq!(seg.eow_index(), Some(0));
        assert_eq!((seg.characters[0].lo, seg.characters[0].hi), (0, 4));
    }

    #[test]
    fn three_teeth_merge_then_absorb_end_stroke() {
        // Three 1-px teeth on a baseline: a medial seen.
        let word = BinaryImage::from_ascii(
            "
            ..............
            ..............
            ..............
            ..............
            #.............
            #..#...#...#..
            #..#...#...#..
            ##############
            ",
        )
        .unwrap();
        let f = feats(&word, 7, 6, 3);
        let cfg = ShapeThresholds {
            baseline_band: 0,
            small_peak_ratio: 1.0,
            ..ShapeThresholds::default()
        };
        let cuts = ecc(&word, &f, &cfg);
        assert_eq!(cuts.len(), 3);
        let (seg, log) = icf_with_order(&word, &cuts, &f, &cfg, &FILTER_ORDER);
        // The teeth merge first; the short stroke at the left edge then
        // qualifies as an end stroke and joins them.
        assert_eq!(log.len(), 2);
        assert_eq!(log[0].pass, FilterPass::SeenSheen);
        assert_eq!(log[0].removed_cuts.len(), 2);
        assert_eq!(log[1].pass, FilterPass::EndStroke);
        assert_eq!(seg.len(), 1);
        assert_eq!(seg.characters[0].parts, 4);
        let ink: usize = seg.characters.iter().map(|c| c.raster.ink_count()).sum();
        assert_eq!(ink, word.ink_count());
    }

    #[test]
    fn teeth_left_uncut_under_dots_still_merge() {
        // The dots over the right pair of teeth block their cut, leaving a
        // two-tooth PC beside a single tooth.
        let word = BinaryImage::from_ascii(
            "
            ..............
            ....###.......
            ..............
            ..............
            ..............
            ...#...#...#..
            ...#...#...#..
            ##############
            ",
        )
        .unwrap();
        let f = feats(&word, 7, 6, 3);
        let cfg = ShapeThresholds {
            baseline_band: 0,
            small_peak_ratio: 1.0,
            dot_max_area_ratio: 0.05,
            ..ShapeThresholds::default()
        };
        let cuts = ecc(&word, &f, &cfg);
        assert_eq!(cuts.len(), 1);
        let pcs = potential_characters(&word, &cuts, &f, &cfg);
        assert_eq!(pcs.iter().map(|p| p.facts.teeth).collect::<Vec<_>>(), vec![1, 2]);
        let (seg, log) = icf_with_order(&word, &cuts, &f, &cfg, &FILTER_ORDER);
        assert_eq!(log[0].pass, FilterPass::SeenSheen);
        assert_eq!(seg.len(), 1);
    }
}
