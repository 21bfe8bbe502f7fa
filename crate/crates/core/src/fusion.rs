//! Per-frame fusion of the CTC posterior with retrieved distributions.
//!
//! Four decode modes build on each other:
//!
//! - `s0`: the CTC posterior passes through untouched.
//! - `s1`: neighbors from a single bilingual store are aggregated and
//!   interpolated with the CTC posterior.
//! - `s2`: both monolingual stores are queried; the store whose top-n
//!   average distance is smaller wins, and only its distribution is
//!   interpolated.
//! - `s3`: as `s2`, then the non-selected language's probability mass is
//!   divided by the scale temperature `t` and the result renormalized.
//!
//! Fusion is stateless per frame; utterances and frames may be processed
//! concurrently as long as output order is preserved by the caller.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::knn::{knn_distribution, KnnIndex, NeighborSet};
use crate::prob::ProbDist;
use crate::tensor::{EmbeddingMatrix, LogitMatrix};
use crate::vocab::{LanguageTag, TokenClass, Vocabulary};
use crate::Result;

/// Decode mode; the wire names `s0`..`s3` are the CLI surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    CtcOnly,
    SingleStore,
    GatedDual,
    GatedDualScaled,
}

impl DecodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeMode::CtcOnly => "s0",
            DecodeMode::SingleStore => "s1",
            DecodeMode::GatedDual => "s2",
            DecodeMode::GatedDualScaled => "s3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "s0" => Ok(DecodeMode::CtcOnly),
            "s1" => Ok(DecodeMode::SingleStore),
            "s2" => Ok(DecodeMode::GatedDual),
            "s3" => Ok(DecodeMode::GatedDualScaled),
            other => Err(CoreError::InvalidConfig(alloc::format!(
                "unknown mode {other:?} (expected s0|s1|s2|s3)"
            ))),
        }
    }
}

impl core::fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All decode hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Neighbors retrieved per store (clamped to the store size).
    pub k: usize,
    /// Top-n prefix whose average distance drives gating; `n <= k`.
    pub n: usize,
    /// kNN softmax temperature dividing the squared distance.
    pub tau: f64,
    /// Interpolation weight of the kNN distribution.
    pub lambda: f64,
    /// Scale temperature dividing the non-selected language's mass.
    pub t: f64,
    pub mode: DecodeMode,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            k: 1024,
            n: 10,
            tau: 1.0,
            lambda: 0.25,
            t: 5.0,
            mode: DecodeMode::CtcOnly,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(CoreError::InvalidConfig("k must be >= 1".to_string()));
        }
        if self.n == 0 || self.n > self.k {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "n must satisfy 1 <= n <= k (n={}, k={})",
                self.n,
                self.k
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(CoreError::InvalidConfig("tau must be > 0".to_string()));
        }
        if !(0.0..=1.0).contains(&self.lambda) || !self.lambda.is_finite() {
            return Err(CoreError::InvalidConfig(
                "lambda must lie in [0, 1]".to_string(),
            ));
        }
        if !(self.t >= 1.0) || !self.t.is_finite() {
            return Err(CoreError::InvalidConfig("t must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Outcome of one gating comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateDecision {
    pub lang: LanguageTag,
    /// Average squared L2 distance of the top-n Chinese neighbors.
    pub d_cn: f64,
    /// Average squared L2 distance of the top-n English neighbors.
    pub d_en: f64,
}

/// The datastores a decode run has loaded, matched against the mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct FusionStores<'a> {
    pub all: Option<&'a KnnIndex>,
    pub cn: Option<&'a KnnIndex>,
    pub en: Option<&'a KnnIndex>,
}

impl<'a> FusionStores<'a> {
    fn require(
        store: Option<&'a KnnIndex>,
        name: &'static str,
        mode: DecodeMode,
    ) -> Result<&'a KnnIndex> {
        store.ok_or_else(|| {
            CoreError::InvalidConfig(alloc::format!("mode {mode} requires the {name} datastore"))
        })
    }
}

/// Compare average distances of the top-n neighbors from each store.
/// Ties select Chinese.
pub fn gate(ns_cn: &NeighborSet, ns_en: &NeighborSet, n: usize) -> Result<GateDecision> {
    if n == 0 {
        return Err(CoreError::InvalidConfig("n must be >= 1".to_string()));
    }
    if ns_cn.is_empty() || ns_en.is_empty() {
        return Err(CoreError::GateUnavailable);
    }
    let mean_top = |ns: &NeighborSet| {
        let take = n.min(ns.len());
        let sum: f64 = ns.entries()[..take].iter().map(|e| e.distance).sum();
        sum / take as f64
    };
    let d_cn = mean_top(ns_cn);
    let d_en = mean_top(ns_en);
    let lang = if d_cn <= d_en {
        LanguageTag::Cn
    } else {
        LanguageTag::En
    };
    Ok(GateDecision { lang, d_cn, d_en })
}

/// Convex combination `lambda * p_knn + (1 - lambda) * p_ctc`.
/// The endpoints return the corresponding input bit for bit.
pub fn interpolate(p_ctc: &ProbDist, p_knn: &ProbDist, lambda: f64) -> Result<ProbDist> {
    if p_ctc.len() != p_knn.len() {
        return Err(CoreError::ShapeMismatch {
            what: "interpolation vocabulary sizes",
            expected: p_ctc.len(),
            got: p_knn.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
        return Err(CoreError::InvalidConfig(
            "lambda must lie in [0, 1]".to_string(),
        ));
    }
    if lambda == 0.0 {
        return Ok(p_ctc.clone());
    }
    if lambda == 1.0 {
        return Ok(p_knn.clone());
    }
    let mixed: Vec<f64> = p_ctc
        .as_slice()
        .iter()
        .zip(p_knn.as_slice())
        .map(|(&c, &k)| lambda * k + (1.0 - lambda) * c)
        .collect();
    ProbDist::new(mixed)
}

/// Divide the mass of every token tagged with the non-selected language by
/// `t`, leave blank and selected-language tokens untouched, renormalize.
/// `t == 1` returns the input unchanged.
pub fn scale_alternate(
    p: &ProbDist,
    selected: LanguageTag,
    vocab: &Vocabulary,
    t: f64,
) -> Result<ProbDist> {
    if !(t >= 1.0) || !t.is_finite() {
        return Err(CoreError::InvalidConfig("t must be >= 1".to_string()));
    }
    if p.len() != vocab.size() {
        return Err(CoreError::ShapeMismatch {
            what: "distribution vs vocabulary size",
            expected: vocab.size(),
            got: p.len(),
        });
    }
    if t == 1.0 {
        return Ok(p.clone());
    }
    let alternate = selected.other();
    let scaled: Vec<f64> = p
        .as_slice()
        .iter()
        .enumerate()
        .map(|(id, &mass)| match vocab.class_of(id as u32) {
            Some(TokenClass::Lang(l)) if l == alternate => mass / t,
            _ => mass,
        })
        .collect();
    crate::prob::normalize(&scaled)
}

/// Fuse one frame under the configured mode. Gated modes report their
/// gate decision alongside the distribution.
pub fn fuse_frame(
    query: &[f32],
    p_ctc: &ProbDist,
    stores: &FusionStores<'_>,
    vocab: &Vocabulary,
    cfg: &FusionConfig,
) -> Result<(ProbDist, Option<GateDecision>)> {
    match cfg.mode {
        DecodeMode::CtcOnly => Ok((p_ctc.clone(), None)),
        DecodeMode::SingleStore => {
            let all = FusionStores::require(stores.all, "bilingual (all)", cfg.mode)?;
            let ns = all.search(query, cfg.k)?;
            let p_knn = knn_distribution(&ns, p_ctc.len(), cfg.tau)?;
            Ok((interpolate(p_ctc, &p_knn, cfg.lambda)?, None))
        }
        DecodeMode::GatedDual | DecodeMode::GatedDualScaled => {
            let cn = FusionStores::require(stores.cn, "Chinese", cfg.mode)?;
            let en = FusionStores::require(stores.en, "English", cfg.mode)?;
            let ns_cn = cn.search(query, cfg.k)?;
            let ns_en = en.search(query, cfg.k)?;
            let decision = gate(&ns_cn, &ns_en, cfg.n)?;
            let selected = match decision.lang {
                LanguageTag::Cn => &ns_cn,
                LanguageTag::En => &ns_en,
            };
            let p_knn = knn_distribution(selected, p_ctc.len(), cfg.tau)?;
            let mut fused = interpolate(p_ctc, &p_knn, cfg.lambda)?;
            if cfg.mode == DecodeMode::GatedDualScaled {
                fused = scale_alternate(&fused, decision.lang, vocab, cfg.t)?;
            }
            Ok((fused, Some(decision)))
        }
    }
}

/// Per-frame fusion output for one utterance.
#[derive(Debug, Clone)]
pub struct UtteranceDecode {
    pub dists: Vec<ProbDist>,
    pub gates: Vec<Option<GateDecision>>,
    /// Frames that fell back to the pure CTC posterior because a store was
    /// empty or produced no neighbors.
    pub fallback_frames: usize,
}

/// Apply [`fuse_frame`] independently to every frame, in order.
///
/// Empty-store and empty-neighbor conditions downgrade the affected frame
/// to its CTC posterior and are counted; configuration errors propagate.
pub fn decode_utterance(
    embeddings: &EmbeddingMatrix,
    logits: &LogitMatrix,
    stores: &FusionStores<'_>,
    vocab: &Vocabulary,
    cfg: &FusionConfig,
) -> Result<UtteranceDecode> {
    cfg.validate()?;
    if embeddings.frames() != logits.frames() {
        return Err(CoreError::ShapeMismatch {
            what: "embedding frames vs logit frames",
            expected: embeddings.frames(),
            got: logits.frames(),
        });
    }
    if logits.vocab_size() != vocab.size() {
        return Err(CoreError::ShapeMismatch {
            what: "logit vocabulary size vs vocabulary",
            expected: vocab.size(),
            got: logits.vocab_size(),
        });
    }
    let frames = logits.frames();
    let mut dists = Vec::with_capacity(frames);
    let mut gates = Vec::with_capacity(frames);
    let mut fallback_frames = 0usize;
    for i in 0..frames {
        let p_ctc = logits.row(i);
        match fuse_frame(embeddings.frame(i), p_ctc, stores, vocab, cfg) {
            Ok((dist, gate)) => {
                dists.push(dist);
                gates.push(gate);
            }
            Err(
                CoreError::EmptyDatastore | CoreError::EmptyNeighbors | CoreError::GateUnavailable,
            ) => {
                dists.push(p_ctc.clone());
                gates.push(None);
                fallback_frames += 1;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(UtteranceDecode {
        dists,
        gates,
        fallback_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::{Datastore, StoreLang};
    use crate::knn::Neighbor;
    use crate::prob::normalize;
    use crate::rng::SplitMix64;
    use crate::tensor::LogitKind;

    fn ns(dists: &[f64]) -> NeighborSet {
        let entries: Vec<Neighbor> = dists
            .iter()
            .enumerate()
            .map(|(i, &d)| Neighbor {
                id: i as u32,
                distance: d,
                value: 0,
            })
            .collect();
        NeighborSet::from_entries(entries, dists.len()).unwrap()
    }

    fn vocab5() -> Vocabulary {
        // ids: 0 <blk>, 1..=2 CN, 3..=4 EN
        Vocabulary::from_tokens(["<blk>", "一", "二", "aa", "bb"]).unwrap()
    }

    #[test]
    fn gate_hand_means() {
        let g = gate(&ns(&[1.0, 2.0, 3.0, 4.0]), &ns(&[5.0, 5.0]), 2).unwrap();
        assert_eq!(g.d_cn, 1.5);
        assert_eq!(g.d_en, 5.0);
        assert_eq!(g.lang, LanguageTag::Cn);
    }

    #[test]
    fn gate_tie_selects_cn() {
        let g = gate(&ns(&[2.0]), &ns(&[2.0]), 1).unwrap();
        assert_eq!(g.lang, LanguageTag::Cn);
    }

    #[test]
    fn gate_sensitive_to_n() {
        // Hand means: n=1 compares 3 vs 1 (EN wins), n=2 compares 3 vs 5.
        let g = gate(&ns(&[3.0, 3.0]), &ns(&[1.0, 9.0]), 1).unwrap();
        assert_eq!(g.lang, LanguageTag::En);
        assert_eq!((g.d_cn, g.d_en), (3.0, 1.0));
        let g = gate(&ns(&[3.0, 3.0]), &ns(&[1.0, 9.0]), 2).unwrap();
        assert_eq!(g.lang, LanguageTag::Cn);
        assert_eq!((g.d_cn, g.d_en), (3.0, 5.0));
    }

    #[test]
    fn gate_clamps_n_to_set_size() {
        let g = gate(&ns(&[1.0]), &ns(&[2.0, 4.0]), 8).unwrap();
        assert_eq!((g.d_cn, g.d_en), (1.0, 3.0));
    }

    #[test]
    fn gate_brute_force_mean_property() {
        let mut rng = SplitMix64::new(0x6A7E);
        for _ in 0..500 {
            let len_cn = 1 + rng.next_range(16) as usize;
            let len_en = 1 + rng.next_range(16) as usize;
            let n = 1 + rng.next_range(20) as usize;
            let mut d_cn: Vec<f64> = (0..len_cn).map(|_| rng.next_f64() * 10.0).collect();
            let mut d_en: Vec<f64> = (0..len_en).map(|_| rng.next_f64() * 10.0).collect();
            d_cn.sort_by(f64::total_cmp);
            d_en.sort_by(f64::total_cmp);
            let g = gate(&ns(&d_cn), &ns(&d_en), n).unwrap();
            let mean = |v: &[f64], n: usize| {
                let take = n.min(v.len());
                v[..take].iter().sum::<f64>() / take as f64
            };
            assert_eq!(g.d_cn, mean(&d_cn, n));
            assert_eq!(g.d_en, mean(&d_en, n));
            assert_eq!(g.lang == LanguageTag::Cn, g.d_cn <= g.d_en);
        }
    }

    #[test]
    fn gate_empty_set_unavailable() {
        let empty = NeighborSet::from_entries(vec![], 4).unwrap();
        assert!(matches!(
            gate(&empty, &ns(&[1.0]), 1),
            Err(CoreError::GateUnavailable)
        ));
    }

    #[test]
    fn interpolate_endpoints_exact() {
        let a = ProbDist::new(vec![0.8, 0.2]).unwrap();
        let b = ProbDist::new(vec![0.4, 0.6]).unwrap();
        assert_eq!(interpolate(&a, &b, 0.0).unwrap(), a);
        assert_eq!(interpolate(&a, &b, 1.0).unwrap(), b);
    }

    #[test]
    fn interpolate_hand_quarter() {
        // Hand oracle: 0.25*0.4 + 0.75*0.8 = 0.7 and 0.25*0.6 + 0.75*0.2 = 0.3.
        let a = ProbDist::new(vec![0.8, 0.2]).unwrap();
        let b = ProbDist::new(vec![0.4, 0.6]).unwrap();
        let m = interpolate(&a, &b, 0.25).unwrap();
        assert!((m.as_slice()[0] - 0.7).abs() < 1e-15);
        assert!((m.as_slice()[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn interpolate_self_is_identity() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..200 {
            let raw: Vec<f64> = (0..8).map(|_| rng.next_f64() + 1e-3).collect();
            let p = normalize(&raw).unwrap();
            let lambda = rng.next_f64();
            let m = interpolate(&p, &p, lambda).unwrap();
            for (x, y) in m.as_slice().iter().zip(p.as_slice()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn interpolate_shape_mismatch() {
        let a = ProbDist::new(vec![1.0]).unwrap();
        let b = ProbDist::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            interpolate(&a, &b, 0.5),
            Err(CoreError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn scale_alternate_identity_at_one() {
        let v = vocab5();
        let p = ProbDist::new(vec![0.1, 0.6, 0.1, 0.15, 0.05]).unwrap();
        assert_eq!(scale_alternate(&p, LanguageTag::En, &v, 1.0).unwrap(), p);
    }

    #[test]
    fn scale_alternate_hand_case() {
        // Selected EN, t=5: CN mass /5 -> {0.10, 0.12, 0.02, 0.15, 0.05},
        // sum 0.44; renormalized entries are those values over 0.44.
        let v = vocab5();
        let p = ProbDist::new(vec![0.10, 0.60, 0.10, 0.15, 0.05]).unwrap();
        let s = scale_alternate(&p, LanguageTag::En, &v, 5.0).unwrap();
        let expected = [
            0.10 / 0.44,
            0.12 / 0.44,
            0.02 / 0.44,
            0.15 / 0.44,
            0.05 / 0.44,
        ];
        for (got, want) in s.as_slice().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Rounded reference values.
        assert!((s.as_slice()[0] - 0.2273).abs() < 1e-4);
        assert!((s.as_slice()[1] - 0.2727).abs() < 1e-4);
        assert!((s.as_slice()[2] - 0.0455).abs() < 1e-4);
        assert!((s.as_slice()[3] - 0.3409).abs() < 1e-4);
        assert!((s.as_slice()[4] - 0.1136).abs() < 1e-4);
    }

    #[test]
    fn scale_alternate_large_t_limit() {
        let v = vocab5();
        let p = ProbDist::new(vec![0.10, 0.60, 0.10, 0.15, 0.05]).unwrap();
        let s = scale_alternate(&p, LanguageTag::En, &v, 1e12).unwrap();
        // Alternate mass vanishes; the rest is proportional to the original
        // blank + selected mass (0.10, 0.15, 0.05 over 0.30).
        assert!(s.as_slice()[1] < 1e-11);
        assert!(s.as_slice()[2] < 1e-12);
        assert!((s.as_slice()[0] - 0.10 / 0.30).abs() < 1e-9);
        assert!((s.as_slice()[3] - 0.15 / 0.30).abs() < 1e-9);
        assert!((s.as_slice()[4] - 0.05 / 0.30).abs() < 1e-9);
    }

    #[test]
    fn scale_alternate_argmax_matches_unnormalized_form() {
        // Renormalization must not change the greedy decision relative to
        // the plain divided vector.
        let v = vocab5();
        let mut rng = SplitMix64::new(0x5CA1E);
        for _ in 0..500 {
            let raw: Vec<f64> = (0..5).map(|_| rng.next_f64() + 1e-6).collect();
            let p = normalize(&raw).unwrap();
            let selected = if rng.next_bool(0.5) {
                LanguageTag::Cn
            } else {
                LanguageTag::En
            };
            let t = 1.0 + rng.next_f64() * 50.0;
            let s = scale_alternate(&p, selected, &v, t).unwrap();
            let unnormalized: Vec<f64> = p
                .as_slice()
                .iter()
                .enumerate()
                .map(|(id, &m)| match v.class_of(id as u32) {
                    Some(TokenClass::Lang(l)) if l == selected.other() => m / t,
                    _ => m,
                })
                .collect();
            assert_eq!(s.argmax() as usize, crate::prob::argmax_slice(&unnormalized));
        }
    }

    #[test]
    fn scale_alternate_preserves_within_group_order_and_argmax_stability() {
        let v = vocab5();
        let mut rng = SplitMix64::new(0xD1CE);
        for _ in 0..500 {
            let raw: Vec<f64> = (0..5).map(|_| rng.next_f64() + 1e-6).collect();
            let p = normalize(&raw).unwrap();
            let selected = if rng.next_bool(0.5) {
                LanguageTag::Cn
            } else {
                LanguageTag::En
            };
            let t = 1.0 + rng.next_f64() * 20.0;
            let s = scale_alternate(&p, selected, &v, t).unwrap();
            let keep: Vec<usize> = (0..5)
                .filter(|&id| {
                    !matches!(v.class_of(id as u32),
                        Some(TokenClass::Lang(l)) if l == selected.other())
                })
                .collect();
            // Relative order inside each group is preserved.
            for w in keep.windows(2) {
                let (a, b) = (w[0], w[1]);
                assert_eq!(
                    p.as_slice()[a] <= p.as_slice()[b],
                    s.as_slice()[a] <= s.as_slice()[b]
                );
            }
            // If the argmax was already blank or selected-language, it stays.
            let am = p.argmax() as usize;
            if keep.contains(&am) {
                assert_eq!(s.argmax() as usize, am);
            }
            if t > 1.0 {
                // Alternate tokens strictly lose mass, everything else gains.
                for id in 0..5usize {
                    let before = p.as_slice()[id];
                    let after = s.as_slice()[id];
                    if before == 0.0 {
                        continue;
                    }
                    if keep.contains(&id) {
                        assert!(after > before);
                    } else {
                        assert!(after < before);
                    }
                }
            }
        }
    }

    /// Two tight clusters in 2-d: CN tokens near the origin, EN tokens near
    /// (10, 0). Store values use the vocab5 id layout.
    fn toy_indexes() -> (KnnIndex, KnnIndex, KnnIndex) {
        let cn = Datastore::from_parts(
            StoreLang::Cn,
            2,
            vec![0.0, 0.0, 0.2, 0.0, 0.0, 0.2, 0.2, 0.2],
            vec![1, 1, 2, 2],
        )
        .unwrap();
        let en = Datastore::from_parts(
            StoreLang::En,
            2,
            vec![10.0, 0.0, 10.2, 0.0, 10.0, 0.2, 10.2, 0.2],
            vec![3, 3, 4, 4],
        )
        .unwrap();
        let mut keys = cn.keys().to_vec();
        keys.extend_from_slice(en.keys());
        let mut values = cn.values().to_vec();
        values.extend_from_slice(en.values());
        let all = Datastore::from_parts(StoreLang::All, 2, keys, values).unwrap();
        (
            KnnIndex::from_store(&cn).unwrap(),
            KnnIndex::from_store(&en).unwrap(),
            KnnIndex::from_store(&all).unwrap(),
        )
    }

    #[test]
    fn fuse_frame_s0_is_pass_through() {
        let v = vocab5();
        let p = ProbDist::new(vec![0.2, 0.2, 0.2, 0.2, 0.2]).unwrap();
        let cfg = FusionConfig {
            mode: DecodeMode::CtcOnly,
            ..FusionConfig::default()
        };
        let (out, g) = fuse_frame(&[0.0, 0.0], &p, &FusionStores::default(), &v, &cfg).unwrap();
        assert_eq!(out, p);
        assert!(g.is_none());
    }

    #[test]
    fn fuse_frame_s2_lambda_zero_reports_gate() {
        let v = vocab5();
        let (cn, en, _) = toy_indexes();
        let stores = FusionStores {
            cn: Some(&cn),
            en: Some(&en),
            ..FusionStores::default()
        };
        let p = ProbDist::new(vec![0.2, 0.2, 0.2, 0.2, 0.2]).unwrap();
        let cfg = FusionConfig {
            mode: DecodeMode::GatedDual,
            k: 4,
            n: 2,
            lambda: 0.0,
            ..FusionConfig::default()
        };
        let (out, g) = fuse_frame(&[0.1, 0.1], &p, &stores, &v, &cfg).unwrap();
        assert_eq!(out, p);
        let g = g.unwrap();
        assert_eq!(g.lang, LanguageTag::Cn);
        assert!(g.d_cn < g.d_en);
    }

    #[test]
    fn fuse_frame_missing_store_is_config_error() {
        let v = vocab5();
        let p = ProbDist::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let cfg = FusionConfig {
            mode: DecodeMode::SingleStore,
            ..FusionConfig::default()
        };
        assert!(matches!(
            fuse_frame(&[0.0, 0.0], &p, &FusionStores::default(), &v, &cfg),
            Err(CoreError::InvalidConfig(_))
        ));
    }

    #[test]
    fn fuse_frame_s3_flips_argmax_per_scalar_oracle() {
        // The frame sits in the EN cluster; CTC narrowly prefers a CN token.
        // Recompute the fused-and-scaled vector by hand and compare the
        // greedy outcome.
        let v = vocab5();
        let (cn, en, _) = toy_indexes();
        let stores = FusionStores {
            cn: Some(&cn),
            en: Some(&en),
            ..FusionStores::default()
        };
        let p_ctc = ProbDist::new(vec![0.04, 0.50, 0.06, 0.30, 0.10]).unwrap();
        let cfg = FusionConfig {
            mode: DecodeMode::GatedDualScaled,
            k: 4,
            n: 2,
            tau: 1.0,
            lambda: 0.25,
            t: 5.0,
        };
        let query = [10.1, 0.1];
        let (out, g) = fuse_frame(&query, &p_ctc, &stores, &v, &cfg).unwrap();
        let g = g.unwrap();
        assert_eq!(g.lang, LanguageTag::En);

        // Scalar oracle: retrieved EN neighbors, their softmax, the convex
        // combination and the division by t, all recomputed independently.
        let en_keys: [[f64; 2]; 4] = [[10.0, 0.0], [10.2, 0.0], [10.0, 0.2], [10.2, 0.2]];
        let en_values = [3usize, 3, 4, 4];
        let q = [query[0] as f64, query[1] as f64];
        let mut dists: Vec<f64> = en_keys
            .iter()
            .map(|k| (q[0] - k[0]).powi(2) + (q[1] - k[1]).powi(2))
            .collect();
        let d_min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut knn_mass = [0.0f64; 5];
        for (d, &val) in dists.iter_mut().zip(&en_values) {
            knn_mass[val] += (-(*d - d_min) / cfg.tau).exp();
        }
        let total: f64 = knn_mass.iter().sum();
        let mut fused: Vec<f64> = p_ctc
            .as_slice()
            .iter()
            .zip(&knn_mass)
            .map(|(&c, &m)| 0.25 * (m / total) + 0.75 * c)
            .collect();
        fused[1] /= 5.0; // CN tokens scaled down
        fused[2] /= 5.0;
        let oracle_argmax = crate::prob::argmax_slice(&fused);
        assert_eq!(out.argmax() as usize, oracle_argmax);
        assert_eq!(oracle_argmax, 3); // flipped from CN token 1 to EN token 3

        // And without scaling the CTC preference would have survived:
        let cfg_s2 = FusionConfig {
            mode: DecodeMode::GatedDual,
            ..cfg
        };
        let (out_s2, _) = fuse_frame(&query, &p_ctc, &stores, &v, &cfg_s2).unwrap();
        assert_eq!(out_s2.argmax(), 1);
    }

    fn toy_logits(rows: &[[f32; 5]]) -> LogitMatrix {
        let flat: Vec<f32> = rows.iter().flatten().copied().collect();
        LogitMatrix::from_raw(LogitKind::Prob, 5, &flat).unwrap()
    }

    #[test]
    fn decode_utterance_empty_input() {
        let v = vocab5();
        let emb = EmbeddingMatrix::new(2, vec![]).unwrap();
        let logits = LogitMatrix::from_raw(LogitKind::Prob, 5, &[]).unwrap();
        let cfg = FusionConfig {
            mode: DecodeMode::CtcOnly,
            ..FusionConfig::default()
        };
        let out =
            decode_utterance(&emb, &logits, &FusionStores::default(), &v, &cfg).unwrap();
        assert!(out.dists.is_empty());
        assert!(out.gates.is_empty());
        assert_eq!(out.fallback_frames, 0);
    }

    #[test]
    fn decode_utterance_stateless_and_permutable() {
        let v = vocab5();
        let (cn, en, _) = toy_indexes();
        let stores = FusionStores {
            cn: Some(&cn),
            en: Some(&en),
            ..FusionStores::default()
        };
        let cfg = FusionConfig {
            mode: DecodeMode::GatedDualScaled,
            k: 3,
            n: 2,
            tau: 0.5,
            lambda: 0.4,
            t: 4.0,
        };
        let frames: Vec<[f32; 2]> = vec![[0.1, 0.0], [10.1, 0.0], [0.0, 0.1]];
        let rows = [
            [0.2, 0.5, 0.1, 0.1, 0.1],
            [0.2, 0.1, 0.1, 0.5, 0.1],
            [0.6, 0.1, 0.1, 0.1, 0.1],
        ];
        let emb = |order: &[usize]| {
            EmbeddingMatrix::new(
                2,
                order.iter().flat_map(|&i| frames[i]).collect::<Vec<f32>>(),
            )
            .unwrap()
        };
        let lg = |order: &[usize]| {
            toy_logits(&order.iter().map(|&i| rows[i]).collect::<Vec<_>>())
        };
        let fwd =
            decode_utterance(&emb(&[0, 1, 2]), &lg(&[0, 1, 2]), &stores, &v, &cfg).unwrap();
        let rev =
            decode_utterance(&emb(&[2, 1, 0]), &lg(&[2, 1, 0]), &stores, &v, &cfg).unwrap();
        for i in 0..3 {
            assert_eq!(fwd.dists[i], rev.dists[2 - i]);
            assert_eq!(fwd.gates[i], rev.gates[2 - i]);
        }
    }

    #[test]
    fn decode_utterance_gate_flips_at_cluster_boundary() {
        // Separation (10 apart, radius ~0.2) forces the decision; the flip
        // happens exactly where the frames move clusters. Verified against
        // brute-force means in gate_brute_force_mean_property.
        let v = vocab5();
        let (cn, en, _) = toy_indexes();
        let stores = FusionStores {
            cn: Some(&cn),
            en: Some(&en),
            ..FusionStores::default()
        };
        let cfg = FusionConfig {
            mode: DecodeMode::GatedDual,
            k: 4,
            n: 2,
            tau: 1.0,
            lambda: 0.25,
            t: 1.0,
        };
        let emb = EmbeddingMatrix::new(
            2,
            vec![0.05, 0.05, 0.1, 0.0, 10.1, 0.0, 10.0, 0.1],
        )
        .unwrap();
        let logits = toy_logits(&[
            [0.2, 0.5, 0.1, 0.1, 0.1],
            [0.2, 0.5, 0.1, 0.1, 0.1],
            [0.2, 0.1, 0.1, 0.5, 0.1],
            [0.2, 0.1, 0.1, 0.5, 0.1],
        ]);
        let out = decode_utterance(&emb, &logits, &stores, &v, &cfg).unwrap();
        let langs: Vec<LanguageTag> =
            out.gates.iter().map(|g| g.unwrap().lang).collect();
        assert_eq!(
            langs,
            vec![
                LanguageTag::Cn,
                LanguageTag::Cn,
                LanguageTag::En,
                LanguageTag::En
            ]
        );
    }

    #[test]
    fn decode_utterance_falls_back_on_empty_store() {
        let v = vocab5();
        let empty = Datastore::from_parts(StoreLang::Cn, 2, vec![], vec![]).unwrap();
        let empty_idx = KnnIndex::from_store(&empty).unwrap();
        let (_, en, _) = toy_indexes();
        let stores = FusionStores {
            cn: Some(&empty_idx),
            en: Some(&en),
            ..FusionStores::default()
        };
        let cfg = FusionConfig {
            mode: DecodeMode::GatedDual,
            k: 2,
            n: 1,
            ..FusionConfig::default()
        };
        let emb = EmbeddingMatrix::new(2, vec![0.0, 0.0]).unwrap();
        let logits = toy_logits(&[[0.2, 0.5, 0.1, 0.1, 0.1]]);
        let out = decode_utterance(&emb, &logits, &stores, &v, &cfg).unwrap();
        assert_eq!(out.fallback_frames, 1);
        assert_eq!(out.dists[0], *logits.row(0));
        assert!(out.gates[0].is_none());
    }

    #[test]
    fn config_validation() {
        let ok = FusionConfig::default();
        assert!(ok.validate().is_ok());
        assert!(FusionConfig { k: 0, ..ok }.validate().is_err());
        assert!(FusionConfig { n: 0, ..ok }.validate().is_err());
        assert!(FusionConfig {
            n: 2000,
            ..ok
        }
        .validate()
        .is_err());
        assert!(FusionConfig {
            tau: 0.0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(FusionConfig {
            lambda: 1.5,
            ..ok
        }
        .validate()
        .is_err());
        assert!(FusionConfig { t: 0.5, ..ok }.validate().is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [
            DecodeMode::CtcOnly,
            DecodeMode::SingleStore,
            DecodeMode::GatedDual,
            DecodeMode::GatedDualScaled,
        ] {
            assert_eq!(DecodeMode::parse(mode.as_str()).unwrap(), mode);
        }
        assert!(DecodeMode::parse("s4").is_err());
    }
}
