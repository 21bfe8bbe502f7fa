//! Frame-level key-value datastores.
//!
//! A datastore pairs every frame's encoder embedding with the pseudo-label
//! obtained by taking the per-frame argmax of the CTC posterior. Blank-labeled
//! frames are stored too (the full, unpruned variant). A store is either
//! monolingual (`Cn` / `En`), in which case every non-blank value must belong
//! to that language, or bilingual (`All`).

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::prob::argmax_slice;
use crate::tensor::{EmbeddingMatrix, LogitMatrix};
use crate::vocab::{LanguageTag, TokenClass, Vocabulary};
use crate::Result;

/// Language coverage of a datastore.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreLang {
    Cn,
    En,
    All,
}

impl StoreLang {
    /// Byte code used in the serialized format.
    pub fn code(self) -> u8 {
        match self {
            StoreLang::Cn => 0,
            StoreLang::En => 1,
            StoreLang::All => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(StoreLang::Cn),
            1 => Some(StoreLang::En),
            2 => Some(StoreLang::All),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StoreLang::Cn => "cn",
            StoreLang::En => "en",
            StoreLang::All => "all",
        }
    }

    /// The language a monolingual store is restricted to.
    pub fn lang(self) -> Option<LanguageTag> {
        match self {
            StoreLang::Cn => Some(LanguageTag::Cn),
            StoreLang::En => Some(LanguageTag::En),
            StoreLang::All => None,
        }
    }
}

impl core::fmt::Display for StoreLang {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Immutable set of (embedding key, token-id value) pairs.
///
/// Keys are kept in single precision; distance math accumulates in double
/// precision. A loaded store may be empty; [`build`] never produces one.
#[derive(Debug, Clone, PartialEq)]
pub struct Datastore {
    lang: StoreLang,
    dim: usize,
    keys: Vec<f32>,
    values: Vec<u32>,
}

impl Datastore {
    /// Assemble a datastore from raw parts, validating shapes and finiteness.
    pub fn from_parts(
        lang: StoreLang,
        dim: usize,
        keys: Vec<f32>,
        values: Vec<u32>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::ShapeMismatch {
                what: "datastore key dimension",
                expected: 1,
                got: 0,
            });
        }
        if keys.len() != values.len() * dim {
            return Err(CoreError::ShapeMismatch {
                what: "datastore keys vs values",
                expected: values.len() * dim,
                got: keys.len(),
            });
        }
        for (i, &x) in keys.iter().enumerate() {
            if !x.is_finite() {
                return Err(CoreError::NonFinite {
                    what: "datastore key",
                    index: i,
                });
            }
        }
        Ok(Datastore {
            lang,
            dim,
            keys,
            values,
        })
    }

    pub fn lang(&self) -> StoreLang {
        self.lang
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn key(&self, i: usize) -> &[f32] {
        &self.keys[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize) -> u32 {
        self.values[i]
    }

    pub fn keys(&self) -> &[f32] {
        &self.keys
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Check the store against a vocabulary: values in range, and for a
    /// monolingual store every non-blank value tagged with that language.
    pub fn validate_against(&self, vocab: &Vocabulary) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            let class = vocab
                .class_of(v)
                .ok_or(CoreError::ValueOutOfRange {
                    index: i,
                    value: v,
                    vocab_size: vocab.size(),
                })?;
            if let (Some(expected), TokenClass::Lang(actual)) = (self.lang.lang(), class) {
                if expected != actual {
                    return Err(CoreError::LabelLanguageViolation {
                        frame: i,
                        token_id: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-frame argmax pseudo-labels; ties break toward the lowest token id.
pub fn pseudo_labels(logits: &LogitMatrix) -> Result<Vec<u32>> {
    if logits.frames() == 0 {
        return Err(CoreError::ShapeMismatch {
            what: "logit frames",
            expected: 1,
            got: 0,
        });
    }
    Ok(logits
        .rows()
        .iter()
        .map(|row| argmax_slice(row.as_slice()) as u32)
        .collect())
}

/// Build a datastore from an embedding/logit pair.
///
/// Every frame is stored, including blank-labeled ones. For a monolingual
/// target, a non-blank pseudo-label of the other language is an error that
/// names the offending frame.
pub fn build(
    embeddings: &EmbeddingMatrix,
    logits: &LogitMatrix,
    lang: StoreLang,
    vocab: &Vocabulary,
) -> Result<Datastore> {
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
    let values = pseudo_labels(logits)?;
    if let Some(expected) = lang.lang() {
        for (frame, &v) in values.iter().enumerate() {
            match vocab.class_of(v) {
                Some(TokenClass::Blank) => {}
                Some(TokenClass::Lang(actual)) if actual == expected => {}
                _ => {
                    return Err(CoreError::LabelLanguageViolation {
                        frame,
                        token_id: v,
                    })
                }
            }
        }
    }
    Datastore::from_parts(lang, embeddings.dim(), embeddings.data().to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::LogitKind;

    fn vocab() -> Vocabulary {
        // ids: 0 <blk>, 1..=2 CN, 3..=4 EN
        Vocabulary::from_tokens(["<blk>", "一", "二", "aa", "bb"]).unwrap()
    }

    fn logits(rows: &[&[f32]]) -> LogitMatrix {
        let flat: Vec<f32> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        LogitMatrix::from_raw(LogitKind::Prob, rows[0].len(), &flat).unwrap()
    }

    #[test]
    fn pseudo_labels_argmax() {
        let m = logits(&[&[0.7, 0.2, 0.1]]);
        assert_eq!(pseudo_labels(&m).unwrap(), vec![0]);
        let m = logits(&[&[0.1, 0.8, 0.1], &[0.1, 0.1, 0.8]]);
        assert_eq!(pseudo_labels(&m).unwrap(), vec![1, 2]);
    }

    #[test]
    fn pseudo_labels_tie_breaks_low() {
        // Exhaustive oracle over the maximal entries picks the lowest id.
        let m = logits(&[&[0.4, 0.4, 0.2]]);
        assert_eq!(pseudo_labels(&m).unwrap(), vec![0]);
    }

    #[test]
    fn pseudo_labels_rejects_nan() {
        assert!(LogitMatrix::from_raw(LogitKind::Prob, 2, &[f32::NAN, 0.5]).is_err());
    }

    #[test]
    fn build_stores_blank_frames() {
        let v = vocab();
        let emb = EmbeddingMatrix::new(2, vec![0.0; 6]).unwrap();
        // labels: blank, CN token 1, blank
        let m = logits(&[
            &[0.9, 0.02, 0.02, 0.03, 0.03],
            &[0.1, 0.8, 0.04, 0.03, 0.03],
            &[0.9, 0.02, 0.02, 0.03, 0.03],
        ]);
        let ds = build(&emb, &m, StoreLang::Cn, &v).unwrap();
        assert_eq!(ds.count(), 3);
        assert_eq!(ds.values(), &[0, 1, 0]);
    }

    #[test]
    fn build_rejects_empty() {
        let v = vocab();
        let emb = EmbeddingMatrix::new(2, vec![]).unwrap();
        let m = LogitMatrix::from_raw(LogitKind::Prob, 5, &[]).unwrap();
        assert!(build(&emb, &m, StoreLang::All, &v).is_err());
    }

    #[test]
    fn build_rejects_cross_language_label() {
        let v = vocab();
        let emb = EmbeddingMatrix::new(2, vec![0.0; 2]).unwrap();
        // argmax is token 3 (EN) but the store is CN.
        let m = logits(&[&[0.1, 0.1, 0.1, 0.6, 0.1]]);
        let err = build(&emb, &m, StoreLang::Cn, &v).unwrap_err();
        assert_eq!(
            err,
            CoreError::LabelLanguageViolation {
                frame: 0,
                token_id: 3
            }
        );
    }

    #[test]
    fn build_concat_counts_add() {
        let v = vocab();
        let e1 = EmbeddingMatrix::new(2, vec![0.0; 4]).unwrap();
        let l1 = logits(&[
            &[0.1, 0.8, 0.04, 0.03, 0.03],
            &[0.9, 0.02, 0.02, 0.03, 0.03],
        ]);
        let e2 = EmbeddingMatrix::new(2, vec![1.0; 2]).unwrap();
        let l2 = logits(&[&[0.1, 0.1, 0.1, 0.6, 0.1]]);
        let cn = build(&e1, &l1, StoreLang::Cn, &v).unwrap();
        let en = build(&e2, &l2, StoreLang::En, &v).unwrap();

        let mut cat_e = e1.data().to_vec();
        cat_e.extend_from_slice(e2.data());
        let cat_emb = EmbeddingMatrix::new(2, cat_e).unwrap();
        let mut rows = l1.rows().to_vec();
        rows.extend_from_slice(l2.rows());
        let cat_logits = LogitMatrix::from_rows(5, rows).unwrap();
        let all = build(&cat_emb, &cat_logits, StoreLang::All, &v).unwrap();
        assert_eq!(all.count(), cn.count() + en.count());
    }

    #[test]
    fn build_deterministic() {
        let v = vocab();
        let emb = EmbeddingMatrix::new(2, vec![0.5, -0.25, 0.125, 2.0]).unwrap();
        let m = logits(&[
            &[0.1, 0.8, 0.04, 0.03, 0.03],
            &[0.9, 0.02, 0.02, 0.03, 0.03],
        ]);
        let a = build(&emb, &m, StoreLang::Cn, &v).unwrap();
        let b = build(&emb, &m, StoreLang::Cn, &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validate_against_checks_range_and_language() {
        let v = vocab();
        let ds = Datastore::from_parts(StoreLang::Cn, 1, vec![0.0], vec![9]).unwrap();
        assert!(matches!(
            ds.validate_against(&v),
            Err(CoreError::ValueOutOfRange { .. })
        ));
        let ds = Datastore::from_parts(StoreLang::Cn, 1, vec![0.0], vec![3]).unwrap();
        assert!(matches!(
            ds.validate_against(&v),
            Err(CoreError::LabelLanguageViolation { .. })
        ));
        let ds = Datastore::from_parts(StoreLang::All, 1, vec![0.0], vec![3]).unwrap();
        assert!(ds.validate_against(&v).is_ok());
    }

    #[test]
    fn from_parts_rejects_nan_keys() {
        assert!(Datastore::from_parts(StoreLang::All, 1, vec![f32::NAN], vec![0]).is_err());
    }
}
