//! Greedy CTC decoding: per-frame argmax, collapse repeats, drop blanks.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::prob::ProbDist;
use crate::vocab::{Vocabulary, BLANK_ID};
use crate::Result;

/// A decoded utterance: surviving token ids and their space-joined text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypothesis {
    pub token_ids: Vec<u32>,
    pub text: String,
}

impl Hypothesis {
    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

/// Decode a distribution sequence.
///
/// Per-frame argmax (ties toward the lowest id), collapse consecutive
/// repeats, then remove blanks — in that order. Empty input decodes to the
/// empty hypothesis.
pub fn greedy_decode(dists: &[ProbDist], vocab: &Vocabulary) -> Result<Hypothesis> {
    let mut token_ids = Vec::new();
    let mut prev: Option<u32> = None;
    for (i, dist) in dists.iter().enumerate() {
        if dist.len() != vocab.size() {
            return Err(CoreError::ShapeMismatch {
                what: "distribution width vs vocabulary",
                expected: vocab.size(),
                got: dists[i].len(),
            });
        }
        let id = dist.argmax();
        if prev != Some(id) && id != BLANK_ID {
            token_ids.push(id);
        }
        prev = Some(id);
    }
    let mut text = String::new();
    for (i, &id) in token_ids.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        // Ids come from argmax over vocab-sized rows, so lookup succeeds.
        text.push_str(vocab.token(id).expect("token id in range"));
    }
    Ok(Hypothesis { token_ids, text })
}
