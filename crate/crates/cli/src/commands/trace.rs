//! `knnctc trace`: per-frame gate distances as CSV, for plotting and for
//! checking gate decisions against ground-truth frame languages.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use knnctc_core::{gate, KnnIndex, StoreLang};

use crate::commands::load_embeddings;
use crate::error::{CliError, Result};
use crate::manifest::{read_manifest, resolve_relative};
use crate::store_io::read_store;

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Test manifest (JSON Lines)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Chinese datastore
    #[arg(long)]
    pub store_cn: PathBuf,
    /// English datastore
    #[arg(long)]
    pub store_en: PathBuf,
    /// Top-n neighbors averaged per store [default: 10]
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

fn load_indexed(path: &Path, role: StoreLang) -> Result<(usize, KnnIndex)> {
    let ds = read_store(path)?;
    if ds.lang() != role {
        return Err(CliError::usage_in(
            path,
            format!("store is tagged {} but is used as the {role} store", ds.lang()),
        ));
    }
    let index = KnnIndex::from_store(&ds).map_err(|e| crate::error::in_file(path, e))?;
    Ok((ds.dim(), index))
}

pub fn run(args: &TraceArgs) -> Result<()> {
    if args.n == 0 {
        return Err(CliError::usage("--n must be >= 1"));
    }
    let (cn_dim, cn_idx) = load_indexed(&args.store_cn, StoreLang::Cn)?;
    let (en_dim, en_idx) = load_indexed(&args.store_en, StoreLang::En)?;
    if cn_dim != en_dim {
        return Err(CliError::usage(format!(
            "store dimensions disagree: {cn_dim} vs {en_dim}"
        )));
    }

    let entries = read_manifest(&args.manifest)?;
    let mut csv = String::from("utt,frame,d_cn,d_en,sel,true\n");
    for entry in &entries {
        let embeddings =
            load_embeddings(&resolve_relative(&args.manifest, &entry.embeddings))?;
        if let Some(lang_frames) = &entry.lang_frames {
            if lang_frames.len() != embeddings.frames() {
                return Err(CliError::data(format!(
                    "utterance {}: lang_frames has {} entries for {} frames",
                    entry.id,
                    lang_frames.len(),
                    embeddings.frames()
                )));
            }
        }
        for frame in 0..embeddings.frames() {
            // Retrieving exactly n neighbors is enough for a top-n average.
            let ns_cn = cn_idx.search(embeddings.frame(frame), args.n)?;
            let ns_en = en_idx.search(embeddings.frame(frame), args.n)?;
            let decision = gate(&ns_cn, &ns_en, args.n)?;
            let truth = match entry.lang_frames.as_ref().map(|lf| lf[frame]) {
                None => "",
                Some(0) => "cn",
                Some(1) => "en",
                Some(other) => {
                    return Err(CliError::data(format!(
                        "utterance {}: lang_frames value {other} is not 0 or 1",
                        entry.id
                    )))
                }
            };
            csv.push_str(&format!(
                "{},{},{:.6},{:.6},{},{}\n",
                entry.id,
                frame,
                decision.d_cn,
                decision.d_en,
                decision.lang.as_str(),
                truth
            ));
        }
    }
    let mut file =
        std::fs::File::create(&args.out).map_err(|e| CliError::usage_in(&args.out, e))?;
    file.write_all(csv.as_bytes())
        .map_err(|e| CliError::usage_in(&args.out, e))?;
    println!("traced {} utterances -> {}", entries.len(), args.out.display());
    Ok(())
}
