//! Mixture-error-rate evaluation and real-time-factor helpers.
//!
//! Text is split into mixed units — single Chinese characters and
//! whitespace-delimited English words — and aligned by a Levenshtein DP
//! with unit costs. Substitutions and deletions are attributed to the
//! reference unit's language; insertions, which have no reference unit, to
//! the hypothesis unit's language. Comparison is exact byte equality after
//! NFC normalization.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;

use crate::error::CoreError;
use crate::vocab::{is_cjk, LanguageTag};
use crate::Result;

/// One evaluation unit: a Chinese character or an English word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub text: String,
    pub lang: LanguageTag,
}

/// A tokenized utterance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MixedTokenSeq {
    pub units: Vec<Unit>,
}

impl MixedTokenSeq {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Space-joined rendering; tokenizing it again yields the same units.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, u) in self.units.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&u.text);
        }
        out
    }

    pub fn count(&self, lang: LanguageTag) -> u64 {
        self.units.iter().filter(|u| u.lang == lang).count() as u64
    }
}

/// Split NFC-normalized text into mixed units. CJK codepoints become
/// single-character Chinese units; maximal non-CJK, non-whitespace runs
/// become English word units; whitespace only delimits.
pub fn tokenize_mixed(text: &str) -> MixedTokenSeq {
    let normalized: String = text.nfc().collect();
    let mut units = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, units: &mut Vec<Unit>| {
        if !word.is_empty() {
            units.push(Unit {
                text: core::mem::take(word),
                lang: LanguageTag::En,
            });
        }
    };
    for c in normalized.chars() {
        if is_cjk(c) {
            flush(&mut word, &mut units);
            let mut s = String::new();
            s.push(c);
            units.push(Unit {
                text: s,
                lang: LanguageTag::Cn,
            });
        } else if c.is_whitespace() {
            flush(&mut word, &mut units);
        } else {
            word.push(c);
        }
    }
    flush(&mut word, &mut units);
    MixedTokenSeq { units }
}

/// Language-attributed error counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts {
    pub subs_cn: u64,
    pub dels_cn: u64,
    pub ins_cn: u64,
    pub subs_en: u64,
    pub dels_en: u64,
    pub ins_en: u64,
}

impl ErrorCounts {
    pub fn total(&self) -> u64 {
        self.cn_total() + self.en_total()
    }

    pub fn cn_total(&self) -> u64 {
        self.subs_cn + self.dels_cn + self.ins_cn
    }

    pub fn en_total(&self) -> u64 {
        self.subs_en + self.dels_en + self.ins_en
    }
}

impl core::ops::Add for ErrorCounts {
    type Output = ErrorCounts;
    fn add(self, rhs: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            subs_cn: self.subs_cn + rhs.subs_cn,
            dels_cn: self.dels_cn + rhs.dels_cn,
            ins_cn: self.ins_cn + rhs.ins_cn,
            subs_en: self.subs_en + rhs.subs_en,
            dels_en: self.dels_en + rhs.dels_en,
            ins_en: self.ins_en + rhs.ins_en,
        }
    }
}

impl core::ops::AddAssign for ErrorCounts {
    fn add_assign(&mut self, rhs: ErrorCounts) {
        *self = *self + rhs;
    }
}

/// Error counts plus the reference-unit denominators they were measured
/// against. Aggregates across utterances by summation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MerStats {
    pub counts: ErrorCounts,
    pub ref_units_cn: u64,
    pub ref_units_en: u64,
}

impl MerStats {
    pub fn ref_units(&self) -> u64 {
        self.ref_units_cn + self.ref_units_en
    }

    /// Total errors over total reference units, percent. Can exceed 100
    /// through insertions. Zero references with zero errors is 0.
    pub fn mer(&self) -> f64 {
        rate(self.counts.total(), self.ref_units())
    }

    /// Chinese-attributed errors over Chinese reference units, percent.
    pub fn cer_cn(&self) -> f64 {
        rate(self.counts.cn_total(), self.ref_units_cn)
    }

    /// English-attributed errors over English reference units, percent.
    pub fn wer_en(&self) -> f64 {
        rate(self.counts.en_total(), self.ref_units_en)
    }
}

impl core::ops::Add for MerStats {
    type Output = MerStats;
    fn add(self, rhs: MerStats) -> MerStats {
        MerStats {
            counts: self.counts + rhs.counts,
            ref_units_cn: self.ref_units_cn + rhs.ref_units_cn,
            ref_units_en: self.ref_units_en + rhs.ref_units_en,
        }
    }
}

impl core::ops::AddAssign for MerStats {
    fn add_assign(&mut self, rhs: MerStats) {
        *self = *self + rhs;
    }
}

/// A zero denominator with zero errors reads as a clean 0.0; with errors it
/// has no meaningful rate and also reports 0.0 — callers that care guard via
/// [`mer`] / [`EvalReport::from_stats`], which reject that case up front.
fn rate(errors: u64, denom: u64) -> f64 {
    if denom == 0 {
        0.0
    } else {
        errors as f64 / denom as f64 * 100.0
    }
}

/// Where a backtraced alignment step came from.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Levenshtein alignment over units with unit costs, counting errors by
/// attributed language. Total function: empty inputs are fine.
///
/// Among cost-equal alignments the backtrace prefers match, then
/// substitution, then deletion, then insertion, fixing the per-type counts
/// deterministically.
pub fn align_units(reference: &MixedTokenSeq, hypothesis: &MixedTokenSeq) -> ErrorCounts {
    let r = &reference.units;
    let h = &hypothesis.units;
    let (m, n) = (r.len(), h.len());
    let width = n + 1;
    let mut cost = vec![0u32; (m + 1) * width];
    for j in 0..=n {
        cost[j] = j as u32;
    }
    for i in 1..=m {
        cost[i * width] = i as u32;
        for j in 1..=n {
            let same = r[i - 1].text == h[j - 1].text;
            let diag = cost[(i - 1) * width + j - 1] + if same { 0 } else { 1 };
            let del = cost[(i - 1) * width + j] + 1;
            let ins = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut counts = ErrorCounts::default();
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        let step = if i > 0 && j > 0 && r[i - 1].text == h[j - 1].text
            && here == cost[(i - 1) * width + j - 1]
        {
            Step::Match
        } else if i > 0 && j > 0 && here == cost[(i - 1) * width + j - 1] + 1 {
            Step::Substitute
        } else if i > 0 && here == cost[(i - 1) * width + j] + 1 {
            Step::Delete
        } else {
            Step::Insert
        };
        match step {
            Step::Match => {
                i -= 1;
                j -= 1;
            }
            Step::Substitute => {
                match r[i - 1].lang {
                    LanguageTag::Cn => counts.subs_cn += 1,
                    LanguageTag::En => counts.subs_en += 1,
                }
                i -= 1;
                j -= 1;
            }
            Step::Delete => {
                match r[i - 1].lang {
                    LanguageTag::Cn => counts.dels_cn += 1,
                    LanguageTag::En => counts.dels_en += 1,
                }
                i -= 1;
            }
            Step::Insert => {
                match h[j - 1].lang {
                    LanguageTag::Cn => counts.ins_cn += 1,
                    LanguageTag::En => counts.ins_en += 1,
                }
                j -= 1;
            }
        }
    }
    counts
}

/// Evaluate one reference/hypothesis pair.
///
/// An empty reference with a non-empty hypothesis has no defined rate;
/// both empty yields all-zero stats.
pub fn mer(reference: &MixedTokenSeq, hypothesis: &MixedTokenSeq) -> Result<MerStats> {
    if reference.is_empty() && !hypothesis.is_empty() {
        return Err(CoreError::UndefinedRate);
    }
    Ok(MerStats {
        counts: align_units(reference, hypothesis),
        ref_units_cn: reference.count(LanguageTag::Cn),
        ref_units_en: reference.count(LanguageTag::En),
    })
}

/// Real time factor: processing seconds over audio seconds.
pub fn rtf(processing_seconds: f64, audio_seconds: f64) -> Result<f64> {
    if !(audio_seconds > 0.0) || !audio_seconds.is_finite() {
        return Err(CoreError::InvalidDuration);
    }
    if !(processing_seconds >= 0.0) || !processing_seconds.is_finite() {
        return Err(CoreError::InvalidDuration);
    }
    Ok(processing_seconds / audio_seconds)
}

/// Flat evaluation report: the rates, the raw counts, and the RTF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub mer: f64,
    pub cer_cn: f64,
    pub wer_en: f64,
    pub counts: ErrorCounts,
    pub rtf: f64,
}

impl EvalReport {
    /// Assemble from aggregated stats; rejects an overall empty reference
    /// with any errors (no defined denominator).
    pub fn from_stats(stats: &MerStats, rtf: f64) -> Result<Self> {
        if stats.ref_units() == 0 && stats.counts.total() > 0 {
            return Err(CoreError::UndefinedRate);
        }
        Ok(EvalReport {
            mer: stats.mer(),
            cer_cn: stats.cer_cn(),
            wer_en: stats.wer_en(),
            counts: stats.counts,
            rtf,
        })
    }

    /// Flat key-value text block, one `key: value` per line.
    pub fn render_text(&self) -> String {
        let c = &self.counts;
        alloc::format!(
            "mer: {:.4}\ncer_cn: {:.4}\nwer_en: {:.4}\nsubs_cn: {}\ndels_cn: {}\n\
             ins_cn: {}\nsubs_en: {}\ndels_en: {}\nins_en: {}\nrtf: {:.6}\n",
            self.mer,
            self.cer_cn,
            self.wer_en,
            c.subs_cn,
            c.dels_cn,
            c.ins_cn,
            c.subs_en,
            c.dels_en,
            c.ins_en,
            self.rtf
        )
    }
}
