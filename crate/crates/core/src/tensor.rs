//! In-memory frame matrices: encoder embeddings and CTC posteriors.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::prob::{normalize, ProbDist};
use crate::Result;

/// T x d matrix of frame embeddings, stored row-major in single precision.
/// Entries are validated finite once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::ShapeMismatch {
                what: "embedding dimension",
                expected: 1,
                got: 0,
            });
        }
        if data.len() % dim != 0 {
            return Err(CoreError::ShapeMismatch {
                what: "embedding data length vs dimension",
                expected: dim,
                got: data.len() % dim,
            });
        }
        for (i, &x) in data.iter().enumerate() {
            if !x.is_finite() {
                return Err(CoreError::NonFinite {
                    what: "embedding",
                    index: i,
                });
            }
        }
        Ok(EmbeddingMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Convention the raw logit rows were stored under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogitKind {
    /// Rows are (possibly unnormalized) probabilities.
    Prob,
    /// Rows are natural-log probabilities.
    LogProb,
}

/// T x |V| per-frame CTC posteriors, normalized to proper distributions at
/// construction so all downstream math works in probability space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    vocab_size: usize,
    rows: Vec<ProbDist>,
}

impl LogitMatrix {
    /// Normalize raw rows under the declared convention. Log-probability
    /// rows are shifted by their row maximum before exponentiation.
    pub fn from_raw(kind: LogitKind, vocab_size: usize, data: &[f32]) -> Result<Self> {
        if vocab_size == 0 {
            return Err(CoreError::ShapeMismatch {
                what: "logit vocabulary size",
                expected: 1,
                got: 0,
            });
        }
        if data.len() % vocab_size != 0 {
            return Err(CoreError::ShapeMismatch {
                what: "logit data length vs vocabulary size",
                expected: vocab_size,
                got: data.len() % vocab_size,
            });
        }
        let frames = data.len() / vocab_size;
        let mut rows = Vec::with_capacity(frames);
        let mut buf: Vec<f64> = Vec::with_capacity(vocab_size);
        for f in 0..frames {
            let raw = &data[f * vocab_size..(f + 1) * vocab_size];
            buf.clear();
            match kind {
                LogitKind::Prob => {
                    for (i, &x) in raw.iter().enumerate() {
                        if !x.is_finite() {
                            return Err(CoreError::NonFinite {
                                what: "logits",
                                index: f * vocab_size + i,
                            });
                        }
                        buf.push(x as f64);
                    }
                }
                LogitKind::LogProb => {
                    let mut max = f64::NEG_INFINITY;
                    for (i, &x) in raw.iter().enumerate() {
                        if x.is_nan() || x == f32::INFINITY {
                            return Err(CoreError::NonFinite {
                                what: "logits",
                                index: f * vocab_size + i,
                            });
                        }
                        max = max.max(x as f64);
                    }
                    if max == f64::NEG_INFINITY {
                        return Err(CoreError::DegenerateDistribution(
                            alloc::format!("all-(-inf) log row at frame {f}"),
                        ));
                    }
                    for &x in raw {
                        buf.push(libm::exp(x as f64 - max));
                    }
                }
            }
            rows.push(normalize(&buf)?);
        }
        Ok(LogitMatrix { vocab_size, rows })
    }

    /// Wrap already-built distributions; all rows must share one width.
    pub fn from_rows(vocab_size: usize, rows: Vec<ProbDist>) -> Result<Self> {
        for row in &rows {
            if row.len() != vocab_size {
                return Err(CoreError::ShapeMismatch {
                    what: "logit row width",
                    expected: vocab_size,
                    got: row.len(),
                });
            }
        }
        Ok(LogitMatrix { vocab_size, rows })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn frames(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &ProbDist {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[ProbDist] {
        &self.rows
    }
}
