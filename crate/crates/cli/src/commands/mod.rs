pub mod bench;
pub mod build;
pub mod decode;
pub mod eval;
pub mod synth;
pub mod trace;

use std::path::Path;

use knnctc_core::{
    Datastore, EmbeddingMatrix, KnnIndex, LogitKind, LogitMatrix, StoreLang, Vocabulary,
};

use crate::error::{in_file, CliError, Result};
use crate::store_io::read_store;
use crate::tensor_io::{read_tensor, Tensor, TensorKind};

pub fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage_in(path, e))?;
    Vocabulary::parse(&text).map_err(|e| in_file(path, e))
}

/// Read an embedding tensor into a validated matrix.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let tensor = read_tensor(path)?;
    if tensor.kind != TensorKind::Embedding {
        return Err(CliError::usage_in(
            path,
            format!("expected an embedding tensor, got kind {}", tensor.kind.as_str()),
        ));
    }
    let (_frames, dim) = tensor.matrix_dims(path)?;
    EmbeddingMatrix::new(dim, tensor.data).map_err(|e| in_file(path, e))
}

/// Read a prob/logprob tensor into normalized per-frame distributions.
pub fn load_logits(path: &Path, vocab: &Vocabulary) -> Result<LogitMatrix> {
    let tensor = read_tensor(path)?;
    let kind = match tensor.kind {
        TensorKind::Prob => LogitKind::Prob,
        TensorKind::LogProb => LogitKind::LogProb,
        TensorKind::Embedding => {
            return Err(CliError::usage_in(
                path,
                "expected a prob or logprob tensor, got kind embedding",
            ))
        }
    };
    let (_frames, width) = tensor.matrix_dims(path)?;
    if width != vocab.size() {
        return Err(CliError::usage_in(
            path,
            format!(
                "logit width {width} does not match vocabulary size {}",
                vocab.size()
            ),
        ));
    }
    LogitMatrix::from_raw(kind, width, &tensor.data).map_err(|e| in_file(path, e))
}

/// Load a datastore for a named role, check its language tag and content
/// against the vocabulary, and index it. Warns when `k` exceeds the store.
pub fn load_store_for_role(
    path: &Path,
    role: StoreLang,
    vocab: &Vocabulary,
    k: usize,
) -> Result<(Datastore, KnnIndex)> {
    let ds = read_store(path)?;
    if ds.lang() != role {
        return Err(CliError::usage_in(
            path,
            format!(
                "store is tagged {} but is used as the {} store",
                ds.lang(),
                role
            ),
        ));
    }
    ds.validate_against(vocab).map_err(|e| in_file(path, e))?;
    if k > ds.count() {
        eprintln!(
            "warning: {}: k={k} exceeds entries={}, clamping to the store size",
            path.display(),
            ds.count()
        );
    }
    let index = KnnIndex::from_store(&ds).map_err(|e| in_file(path, e))?;
    Ok((ds, index))
}

/// Convenience constructor for 2-d tensors.
pub fn matrix_tensor(kind: TensorKind, frames: usize, width: usize, data: Vec<f32>) -> Tensor {
    Tensor::new(kind, vec![frames as u64, width as u64], data)
}
