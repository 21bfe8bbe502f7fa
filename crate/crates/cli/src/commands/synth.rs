//! `knnctc synth`: generate a synthetic bilingual corpus on disk.
//!
//! Layout under --out:
//!
//! ```text
//! vocab.txt                          one token per line, line 0 = <blk>
//! train/{cn,en,all}.embeddings.tnsr  concatenated train frames per language
//! train/{cn,en,all}.logits.tnsr      matching posteriors (logprob kind)
//! test/<id>.embeddings.tnsr          one pair per test utterance
//! test/<id>.logits.tnsr
//! manifest.jsonl                     test manifest with references and
//!                                    per-frame languages (0 = cn, 1 = en)
//! ```

use std::path::{Path, PathBuf};

use clap::Args;
use knnctc_core::synth::{generate, SynthSpec, SynthUtterance};
use knnctc_core::LanguageTag;
use serde::Deserialize;

use crate::commands::matrix_tensor;
use crate::error::{CliError, Result};
use crate::manifest::{write_jsonl, ManifestEntry};
use crate::tensor_io::{write_tensor, TensorKind};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Spec file (JSON)
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// On-disk spec mirror; unknown keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    seed: u64,
    dim: usize,
    vocab_cn: usize,
    vocab_en: usize,
    cluster_sep: f64,
    cluster_radius: f64,
    confusion_rate: f64,
    frames_per_token: [usize; 2],
    cs_rate: f64,
    utterances: usize,
}

impl From<SpecFile> for SynthSpec {
    fn from(f: SpecFile) -> Self {
        SynthSpec {
            seed: f.seed,
            dim: f.dim,
            vocab_cn: f.vocab_cn,
            vocab_en: f.vocab_en,
            cluster_sep: f.cluster_sep,
            cluster_radius: f.cluster_radius,
            confusion_rate: f.confusion_rate,
            frames_per_token: (f.frames_per_token[0], f.frames_per_token[1]),
            cs_rate: f.cs_rate,
            utterances: f.utterances,
        }
    }
}

fn write_split(
    dir: &Path,
    name: &str,
    utterances: &[&SynthUtterance],
    dim: usize,
    vocab_size: usize,
) -> Result<usize> {
    let mut embeddings = Vec::new();
    let mut logits = Vec::new();
    let mut frames = 0usize;
    for utt in utterances {
        embeddings.extend_from_slice(&utt.embeddings);
        logits.extend_from_slice(&utt.log_posteriors);
        frames += utt.frames;
    }
    write_tensor(
        &dir.join(format!("{name}.embeddings.tnsr")),
        &matrix_tensor(TensorKind::Embedding, frames, dim, embeddings),
    )?;
    write_tensor(
        &dir.join(format!("{name}.logits.tnsr")),
        &matrix_tensor(TensorKind::LogProb, frames, vocab_size, logits),
    )?;
    Ok(frames)
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let text =
        std::fs::read_to_string(&args.spec).map_err(|e| CliError::usage_in(&args.spec, e))?;
    let spec_file: SpecFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage_in(&args.spec, e))?;
    let spec = SynthSpec::from(spec_file);
    let corpus = generate(&spec)?;

    let out = &args.out;
    let train_dir = out.join("train");
    let test_dir = out.join("test");
    for dir in [out.as_path(), &train_dir, &test_dir] {
        std::fs::create_dir_all(dir).map_err(|e| CliError::usage_in(dir, e))?;
    }

    let mut vocab_text = corpus.tokens.join("\n");
    vocab_text.push('\n');
    std::fs::write(out.join("vocab.txt"), vocab_text)
        .map_err(|e| CliError::usage_in(out, e))?;

    let vocab_size = corpus.vocab_size();
    let cn_refs: Vec<&SynthUtterance> = corpus.train_cn.iter().collect();
    let en_refs: Vec<&SynthUtterance> = corpus.train_en.iter().collect();
    let all_refs: Vec<&SynthUtterance> = cn_refs.iter().chain(&en_refs).copied().collect();
    let cn_frames = write_split(&train_dir, "cn", &cn_refs, corpus.dim, vocab_size)?;
    let en_frames = write_split(&train_dir, "en", &en_refs, corpus.dim, vocab_size)?;
    write_split(&train_dir, "all", &all_refs, corpus.dim, vocab_size)?;

    let mut manifest = Vec::with_capacity(corpus.test.len());
    let mut test_frames = 0usize;
    for utt in &corpus.test {
        write_tensor(
            &test_dir.join(format!("{}.embeddings.tnsr", utt.id)),
            &matrix_tensor(TensorKind::Embedding, utt.frames, corpus.dim, utt.embeddings.clone()),
        )?;
        write_tensor(
            &test_dir.join(format!("{}.logits.tnsr", utt.id)),
            &matrix_tensor(TensorKind::LogProb, utt.frames, vocab_size, utt.log_posteriors.clone()),
        )?;
        test_frames += utt.frames;
        manifest.push(ManifestEntry {
            id: utt.id.clone(),
            embeddings: format!("test/{}.embeddings.tnsr", utt.id),
            logits: format!("test/{}.logits.tnsr", utt.id),
            reference: utt.reference.clone(),
            lang_frames: Some(
                utt.lang_frames
                    .iter()
                    .map(|l| match l {
                        LanguageTag::Cn => 0,
                        LanguageTag::En => 1,
                    })
                    .collect(),
            ),
        });
    }
    write_jsonl(&out.join("manifest.jsonl"), &manifest)?;

    println!(
        "corpus: vocab={vocab_size} train_cn_frames={cn_frames} train_en_frames={en_frames} \
         test_utterances={} test_frames={test_frames} -> {}",
        corpus.test.len(),
        out.display()
    );
    Ok(())
}
