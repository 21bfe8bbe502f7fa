//! Retrieval-augmented CTC decoding for bilingual code-switching speech.
//!
//! This crate implements the compute side of a kNN-augmented CTC decoder:
//! frame-level key-value datastores built from pseudo-labels, exact k-nearest
//! neighbor search under squared L2 distance, per-frame gated selection
//! between two monolingual datastores, interpolation of the retrieved
//! distribution with the CTC posterior, scaling of the non-selected
//! language's probability mass, greedy CTC decoding, and mixture-error-rate
//! evaluation over mixed Chinese-character / English-word units.
//!
//! The crate is `no_std` (with `alloc`) and fully deterministic: all
//! transcendental math goes through [`libm`] and all randomness through the
//! [`rng::SplitMix64`] generator, so results are bit-reproducible across
//! platforms. File formats, IO and the command-line pipeline live in the
//! companion `knnctc-cli` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ctc;
pub mod datastore;
pub mod error;
pub mod fusion;
pub mod knn;
pub mod metrics;
pub mod prob;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod vocab;

pub use ctc::{greedy_decode, Hypothesis};
pub use datastore::{build, pseudo_labels, Datastore, StoreLang};
pub use error::CoreError;
pub use fusion::{
    decode_utterance, fuse_frame, gate, interpolate, scale_alternate, DecodeMode, FusionConfig,
    FusionStores, GateDecision, UtteranceDecode,
};
pub use knn::{
    auto_partitions, brute_force_search, knn_distribution, squared_l2, IndexParams, KnnIndex,
    Neighbor, NeighborSet,
};
pub use metrics::{
    align_units, mer, rtf, tokenize_mixed, ErrorCounts, EvalReport, MerStats, MixedTokenSeq, Unit,
};
pub use prob::{normalize, ProbDist};
pub use synth::{generate, SynthCorpus, SynthSpec, SynthUtterance};
pub use tensor::{EmbeddingMatrix, LogitKind, LogitMatrix};
pub use vocab::{classify_token, LanguageTag, TokenClass, Vocabulary, BLANK_ID, BLANK_TOKEN};

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, CoreError>;
