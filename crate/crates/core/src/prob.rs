//! Probability vectors over the vocabulary.
//!
//! All probability mass is carried and accumulated in `f64` regardless of
//! how tensors are stored on disk, so the normalization tolerance below is
//! meaningful.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::Result;

/// A distribution must sum to 1 within this tolerance.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Inputs already summing to 1 within this bound are returned unchanged by
/// [`normalize`], which makes normalization exactly idempotent. The bound is
/// far below `SUM_TOLERANCE` and above the rounding error of one division
/// pass over any realistic vocabulary size.
const ALREADY_NORMALIZED: f64 = 1e-12;

/// A probability distribution over vocabulary indices.
///
/// Construction rejects negative, non-finite, or out-of-tolerance vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    p: Vec<f64>,
}

impl ProbDist {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &x) in p.iter().enumerate() {
            if !x.is_finite() {
                return Err(CoreError::NonFinite {
                    what: "probability",
                    index: i,
                });
            }
            if x < 0.0 {
                return Err(CoreError::DegenerateDistribution(alloc::format!(
                    "negative mass {x} at index {i}"
                )));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(CoreError::DegenerateDistribution(alloc::format!(
                "sum {sum} outside tolerance"
            )));
        }
        Ok(ProbDist { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Index of the largest entry; ties break toward the lowest id.
    pub fn argmax(&self) -> u32 {
        let mut best = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        for (i, &x) in self.p.iter().enumerate() {
            if x > best_val {
                best_val = x;
                best = i;
            }
        }
        best as u32
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }
}

/// Argmax with lowest-id tie-break over a raw slice.
pub fn argmax_slice(row: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &x) in row.iter().enumerate() {
        if x > best_val {
            best_val = x;
            best = i;
        }
    }
    best
}

/// Scale a non-negative vector to unit mass.
///
/// Rejects empty, all-zero, negative, or non-finite input. Input that
/// already sums to 1 (within `1e-12`) is returned unchanged, so
/// `normalize(normalize(p)) == normalize(p)` exactly.
pub fn normalize(p: &[f64]) -> Result<ProbDist> {
    if p.is_empty() {
        return Err(CoreError::DegenerateDistribution("empty vector".to_string()));
    }
    let mut sum = 0.0;
    for (i, &x) in p.iter().enumerate() {
        if !x.is_finite() {
            return Err(CoreError::NonFinite {
                what: "unnormalized mass",
                index: i,
            });
        }
        if x < 0.0 {
            return Err(CoreError::DegenerateDistribution(alloc::format!(
                "negative mass {x} at index {i}"
            )));
        }
        sum += x;
    }
    if sum <= 0.0 {
        return Err(CoreError::DegenerateDistribution(
            "all-zero vector".to_string(),
        ));
    }
    if (sum - 1.0).abs() <= ALREADY_NORMALIZED {
        return Ok(ProbDist { p: p.to_vec() });
    }
    let scaled: Vec<f64> = p.iter().map(|&x| x / sum).collect();
    Ok(ProbDist { p: scaled })
}
