//! Error type shared by every module of the core crate.

use alloc::string::String;
use core::fmt;

/// All failure modes of the core pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A token string violated the vocabulary rules (empty, duplicate, ...).
    InvalidToken(String),
    /// A vector could not be turned into a probability distribution
    /// (all-zero, negative entries, out-of-tolerance sum).
    DegenerateDistribution(String),
    /// Two shapes that must agree do not.
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A NaN or infinity where finite data is required.
    NonFinite { what: &'static str, index: usize },
    /// A monolingual datastore received a pseudo-label of the other language.
    LabelLanguageViolation { frame: usize, token_id: u32 },
    /// Search over a datastore with zero entries.
    EmptyDatastore,
    /// A kNN distribution was requested from an empty neighbor set.
    EmptyNeighbors,
    /// Gating needs non-empty neighbor sets from both datastores.
    GateUnavailable,
    /// An invalid hyperparameter or a store/mode mismatch.
    InvalidConfig(String),
    /// A datastore value does not fit the vocabulary it is decoded with.
    ValueOutOfRange {
        index: usize,
        value: u32,
        vocab_size: usize,
    },
    /// Non-positive or non-finite audio duration in an RTF computation.
    InvalidDuration,
    /// Error rate over an empty reference with a non-empty hypothesis.
    UndefinedRate,
    /// A synthetic-corpus spec with degenerate parameters.
    InvalidSpec(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidToken(msg) => write!(f, "invalid token: {msg}"),
            CoreError::DegenerateDistribution(msg) => {
                write!(f, "degenerate distribution: {msg}")
            }
            CoreError::ShapeMismatch {
                what,
                expected,
                got,
            } => write!(f, "shape mismatch: {what}: expected {expected}, got {got}"),
            CoreError::NonFinite { what, index } => {
                write!(f, "non-finite value in {what} at index {index}")
            }
            CoreError::LabelLanguageViolation { frame, token_id } => write!(
                f,
                "label-language violation at frame {frame}: token id {token_id} \
                 belongs to the other language"
            ),
            CoreError::EmptyDatastore => write!(f, "datastore has no entries"),
            CoreError::EmptyNeighbors => write!(f, "neighbor set is empty"),
            CoreError::GateUnavailable => {
                write!(f, "gating unavailable: a neighbor set is empty")
            }
            CoreError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            CoreError::ValueOutOfRange {
                index,
                value,
                vocab_size,
            } => write!(
                f,
                "datastore value {value} at entry {index} is outside the \
                 vocabulary of size {vocab_size}"
            ),
            CoreError::InvalidDuration => {
                write!(f, "audio duration must be positive and finite")
            }
            CoreError::UndefinedRate => write!(
                f,
                "error rate undefined: empty reference with non-empty hypothesis"
            ),
            CoreError::InvalidSpec(msg) => write!(f, "invalid synthesis spec: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}
