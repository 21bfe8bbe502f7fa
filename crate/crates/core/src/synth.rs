//! Deterministic synthetic bilingual corpus generation.
//!
//! Stands in for fine-tuned acoustic models: every token owns an embedding
//! centroid, frames are centroid plus Gaussian noise, and the CTC posterior
//! is a smoothed one-hot whose mass can leak toward a fixed cross-lingual
//! confusable token. The train split is strictly monolingual (the zero-shot
//! setting); the test split code-switches.
//!
//! Generation is single-threaded and consumes one [`SplitMix64`] stream in a
//! fixed order (centroids, then train Chinese, train English, test), so a
//! spec reproduces the same corpus bit for bit on any platform.
//!
//! Fixed generator constants, in addition to the spec fields:
//!
//! - tokens per utterance: uniform in `8..=16`
//! - train utterances per language: `max(1, ceil(utterances / 12))`
//! - probability of a blank frame after a train token: `0.3`
//! - confusable-pair centroid distance: `0.6 * cluster_sep`
//! - posterior smoothing mass: `0.01`
//! - leaked posterior fraction of a confused frame: uniform in `0.25..0.75`
//!
//! Posterior confusion applies to test frames only: train pseudo-labels
//! must stay language-pure so monolingual datastores can be built from
//! them, mirroring models fine-tuned on monolingual data.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::rng::SplitMix64;
use crate::vocab::{LanguageTag, BLANK_TOKEN};
use crate::Result;

const TOKENS_PER_UTT_MIN: u64 = 8;
const TOKENS_PER_UTT_SPAN: u64 = 9; // 8..=16
const TRAIN_UTT_DIVISOR: usize = 12;
const TRAIN_BLANK_RATE: f64 = 0.3;
const PAIR_OFFSET_FACTOR: f64 = 0.6;
const SMOOTH_EPS: f64 = 0.01;
const LEAK_MIN: f64 = 0.25;
const LEAK_SPAN: f64 = 0.5; // 0.25..0.75

/// Largest Chinese vocabulary the single-codepoint token scheme supports.
const MAX_VOCAB_CN: usize = 0x9FFF - 0x4E00 + 1;

/// Everything that determines a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub dim: usize,
    pub vocab_cn: usize,
    pub vocab_en: usize,
    /// Expected distance between unrelated token centroids.
    pub cluster_sep: f64,
    /// Within-token Gaussian sigma per coordinate.
    pub cluster_radius: f64,
    /// Probability that a test frame's posterior leaks toward its
    /// cross-lingual confusable.
    pub confusion_rate: f64,
    /// Inclusive range of emission frames per token.
    pub frames_per_token: (usize, usize),
    /// Probability of a language switch between consecutive test tokens.
    pub cs_rate: f64,
    /// Test utterance count.
    pub utterances: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 7,
            dim: 32,
            vocab_cn: 40,
            vocab_en: 30,
            cluster_sep: 6.0,
            cluster_radius: 1.0,
            confusion_rate: 0.4,
            frames_per_token: (1, 2),
            cs_rate: 0.3,
            utterances: 200,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CoreError::InvalidSpec("dim must be >= 1".to_string()));
        }
        if self.vocab_cn == 0 || self.vocab_en == 0 {
            return Err(CoreError::InvalidSpec(
                "vocab_cn and vocab_en must be >= 1".to_string(),
            ));
        }
        if self.vocab_cn > MAX_VOCAB_CN {
            return Err(CoreError::InvalidSpec(format!(
                "vocab_cn exceeds {MAX_VOCAB_CN}"
            )));
        }
        if !(self.cluster_sep > 0.0) || !self.cluster_sep.is_finite() {
            return Err(CoreError::InvalidSpec(
                "cluster_sep must be > 0".to_string(),
            ));
        }
        if !(self.cluster_radius >= 0.0) || !self.cluster_radius.is_finite() {
            return Err(CoreError::InvalidSpec(
                "cluster_radius must be >= 0".to_string(),
            ));
        }
        for (name, p) in [
            ("confusion_rate", self.confusion_rate),
            ("cs_rate", self.cs_rate),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(CoreError::InvalidSpec(format!(
                    "{name} must lie in [0, 1]"
                )));
            }
        }
        let (lo, hi) = self.frames_per_token;
        if lo == 0 || lo > hi {
            return Err(CoreError::InvalidSpec(
                "frames_per_token must satisfy 1 <= min <= max".to_string(),
            ));
        }
        Ok(())
    }

    /// Train utterances generated per language.
    pub fn train_utterances_per_lang(&self) -> usize {
        core::cmp::max(1, self.utterances.div_ceil(TRAIN_UTT_DIVISOR))
    }
}

/// One generated utterance: embeddings, log-probability posteriors, the
/// reference text and per-frame ground-truth language.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthUtterance {
    pub id: String,
    pub frames: usize,
    /// frames x dim, row-major.
    pub embeddings: Vec<f32>,
    /// frames x |V| natural-log probabilities, row-major.
    pub log_posteriors: Vec<f32>,
    pub reference: String,
    pub lang_frames: Vec<LanguageTag>,
}

/// A full corpus: vocabulary lines, monolingual train splits, and the
/// code-switched test split.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub tokens: Vec<String>,
    pub dim: usize,
    pub train_cn: Vec<SynthUtterance>,
    pub train_en: Vec<SynthUtterance>,
    pub test: Vec<SynthUtterance>,
}

impl SynthCorpus {
    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    rng: SplitMix64,
    tokens: &'a [String],
    /// (1 + vocab_cn + vocab_en) x dim centroids; row 0 is the blank.
    centroids: Vec<f64>,
}

impl<'a> Generator<'a> {
    fn token_id_cn(&self, i: usize) -> u32 {
        (1 + i) as u32
    }

    fn token_id_en(&self, j: usize) -> u32 {
        (1 + self.spec.vocab_cn + j) as u32
    }

    /// The designated cross-lingual confusable of a non-blank token.
    fn confusable(&self, id: u32) -> u32 {
        let idx = id as usize - 1;
        if idx < self.spec.vocab_cn {
            self.token_id_en(idx % self.spec.vocab_en)
        } else {
            self.token_id_cn((idx - self.spec.vocab_cn) % self.spec.vocab_cn)
        }
    }

    fn draw_centroids(spec: &SynthSpec, rng: &mut SplitMix64) -> Vec<f64> {
        let dim = spec.dim;
        let total = 1 + spec.vocab_cn + spec.vocab_en;
        // Independent Gaussian placement with per-coordinate sigma chosen so
        // unrelated centroids sit cluster_sep apart in expectation.
        let sigma = spec.cluster_sep / libm::sqrt(2.0 * dim as f64);
        let mut centroids = vec![0.0f64; total * dim];
        for row in 0..=spec.vocab_cn {
            for d in 0..dim {
                centroids[row * dim + d] = sigma * rng.next_gaussian();
            }
        }
        // Confusable English centroids are planted near their Chinese
        // partner; extras beyond the Chinese vocabulary are free-standing.
        let pair_dist = PAIR_OFFSET_FACTOR * spec.cluster_sep;
        for j in 0..spec.vocab_en {
            let row = 1 + spec.vocab_cn + j;
            if j < spec.vocab_cn {
                let mut dir = vec![0.0f64; dim];
                let mut norm_sq = 0.0;
                for d in dir.iter_mut() {
                    *d = rng.next_gaussian();
                    norm_sq += *d * *d;
                }
                let norm = libm::sqrt(norm_sq);
                let partner = 1 + j;
                for d in 0..dim {
                    let unit = if norm > 1e-12 { dir[d] / norm } else { f64::from(d == 0) };
                    centroids[row * dim + d] =
                        centroids[partner * dim + d] + pair_dist * unit;
                }
            } else {
                for d in 0..dim {
                    centroids[row * dim + d] = sigma * rng.next_gaussian();
                }
            }
        }
        centroids
    }

    fn push_frame(
        &mut self,
        token_id: u32,
        lang: LanguageTag,
        confusable: bool,
        utt: &mut SynthUtterance,
    ) {
        let dim = self.spec.dim;
        let centroid = self.centroids
            [token_id as usize * dim..(token_id as usize + 1) * dim]
            .to_vec();
        for c in centroid {
            utt.embeddings
                .push((c + self.spec.cluster_radius * self.rng.next_gaussian()) as f32);
        }
        let v = self.tokens.len() as f64;
        let mut row = vec![SMOOTH_EPS / v; self.tokens.len()];
        row[token_id as usize] += 1.0 - SMOOTH_EPS;
        if confusable && self.rng.next_bool(self.spec.confusion_rate) {
            let leak_fraction = LEAK_MIN + LEAK_SPAN * self.rng.next_f64();
            let leaked = leak_fraction * row[token_id as usize];
            row[token_id as usize] -= leaked;
            row[self.confusable(token_id) as usize] += leaked;
        }
        for p in row {
            utt.log_posteriors.push(libm::log(p) as f32);
        }
        utt.lang_frames.push(lang);
        utt.frames += 1;
    }

    /// Uniform token index avoiding `prev` (when the pool allows it).
    fn pick_token(&mut self, vocab: usize, prev: Option<usize>) -> usize {
        match prev {
            Some(p) if vocab > 1 => {
                let idx = self.rng.next_range(vocab as u64 - 1) as usize;
                if idx >= p {
                    idx + 1
                } else {
                    idx
                }
            }
            _ => self.rng.next_range(vocab as u64) as usize,
        }
    }

    fn emission_frames(&mut self) -> usize {
        let (lo, hi) = self.spec.frames_per_token;
        lo + self.rng.next_range((hi - lo + 1) as u64) as usize
    }

    fn train_utterance(&mut self, lang: LanguageTag, index: usize) -> SynthUtterance {
        let mut utt = SynthUtterance {
            id: format!("{}-{index:04}", lang.as_str()),
            frames: 0,
            embeddings: Vec::new(),
            log_posteriors: Vec::new(),
            reference: String::new(),
            lang_frames: Vec::new(),
        };
        let vocab = match lang {
            LanguageTag::Cn => self.spec.vocab_cn,
            LanguageTag::En => self.spec.vocab_en,
        };
        let n_tokens = TOKENS_PER_UTT_MIN + self.rng.next_range(TOKENS_PER_UTT_SPAN);
        let mut prev: Option<usize> = None;
        let mut token_ids = Vec::new();
        for _ in 0..n_tokens {
            let idx = self.pick_token(vocab, prev);
            let id = match lang {
                LanguageTag::Cn => self.token_id_cn(idx),
                LanguageTag::En => self.token_id_en(idx),
            };
            token_ids.push(id);
            let frames = self.emission_frames();
            let repeat = prev == Some(idx);
            if repeat {
                // A blank keeps identical neighbors apart under collapse.
                self.push_frame(0, lang, false, &mut utt);
            }
            for _ in 0..frames {
                self.push_frame(id, lang, false, &mut utt);
            }
            if self.rng.next_bool(TRAIN_BLANK_RATE) {
                self.push_frame(0, lang, false, &mut utt);
            }
            prev = Some(idx);
        }
        utt.reference = self.render(&token_ids);
        utt
    }

    fn test_utterance(&mut self, index: usize) -> SynthUtterance {
        let mut utt = SynthUtterance {
            id: format!("cs-{index:04}"),
            frames: 0,
            embeddings: Vec::new(),
            log_posteriors: Vec::new(),
            reference: String::new(),
            lang_frames: Vec::new(),
        };
        let n_tokens = TOKENS_PER_UTT_MIN + self.rng.next_range(TOKENS_PER_UTT_SPAN);
        let mut lang = if self.rng.next_bool(0.5) {
            LanguageTag::Cn
        } else {
            LanguageTag::En
        };
        let mut prev: Option<(LanguageTag, usize)> = None;
        let mut token_ids = Vec::new();
        for t in 0..n_tokens {
            if t > 0 && self.rng.next_bool(self.spec.cs_rate) {
                lang = lang.other();
            }
            let vocab = match lang {
                LanguageTag::Cn => self.spec.vocab_cn,
                LanguageTag::En => self.spec.vocab_en,
            };
            let prev_same_lang = match prev {
                Some((l, idx)) if l == lang => Some(idx),
                _ => None,
            };
            let idx = self.pick_token(vocab, prev_same_lang);
            let id = match lang {
                LanguageTag::Cn => self.token_id_cn(idx),
                LanguageTag::En => self.token_id_en(idx),
            };
            token_ids.push(id);
            let frames = self.emission_frames();
            if prev_same_lang == Some(idx) {
                self.push_frame(0, lang, false, &mut utt);
            }
            for _ in 0..frames {
                self.push_frame(id, lang, true, &mut utt);
            }
            prev = Some((lang, idx));
        }
        utt.reference = self.render(&token_ids);
        utt
    }

    fn render(&self, token_ids: &[u32]) -> String {
        let mut out = String::new();
        for (i, &id) in token_ids.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&self.tokens[id as usize]);
        }
        out
    }
}

fn token_strings(spec: &SynthSpec) -> Vec<String> {
    let mut tokens = Vec::with_capacity(1 + spec.vocab_cn + spec.vocab_en);
    tokens.push(BLANK_TOKEN.to_string());
    for i in 0..spec.vocab_cn {
        let c = char::from_u32(0x4E00 + i as u32).expect("CJK codepoint");
        tokens.push(c.to_string());
    }
    for j in 0..spec.vocab_en {
        tokens.push(format!("en{j}"));
    }
    tokens
}

/// Generate the full corpus for a spec. Deterministic in the seed.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let tokens = token_strings(spec);
    let mut rng = SplitMix64::new(spec.seed);
    let centroids = Generator::draw_centroids(spec, &mut rng);
    let mut generator = Generator {
        spec,
        rng,
        tokens: &tokens,
        centroids,
    };

    let train_n = spec.train_utterances_per_lang();
    let train_cn: Vec<SynthUtterance> = (0..train_n)
        .map(|i| generator.train_utterance(LanguageTag::Cn, i))
        .collect();
    let train_en: Vec<SynthUtterance> = (0..train_n)
        .map(|i| generator.train_utterance(LanguageTag::En, i))
        .collect();
    let test: Vec<SynthUtterance> = (0..spec.utterances)
        .map(|i| generator.test_utterance(i))
        .collect();

    Ok(SynthCorpus {
        tokens,
        dim: spec.dim,
        train_cn,
        train_en,
        test,
    })
}
