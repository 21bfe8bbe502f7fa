//! `knnctc build`: turn an embedding/logit tensor pair into a datastore.

use std::path::PathBuf;

use clap::Args;
use knnctc_core::{build, StoreLang, TokenClass};

use crate::commands::{load_embeddings, load_logits, load_vocab};
use crate::error::{CliError, Result};
use crate::store_io::write_store;

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Embedding tensor (TNSR, kind embedding, dims [T, d])
    #[arg(long)]
    pub embeddings: PathBuf,
    /// CTC posterior tensor (TNSR, kind prob or logprob, dims [T, |V|])
    #[arg(long)]
    pub logits: PathBuf,
    /// Language of the datastore
    #[arg(long, value_parser = parse_lang)]
    pub lang: StoreLang,
    /// Vocabulary file (one token per line, line 0 = "<blk>")
    #[arg(long)]
    pub vocab: PathBuf,
    /// Output datastore path (KNDS)
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_lang(s: &str) -> std::result::Result<StoreLang, String> {
    match s {
        "cn" => Ok(StoreLang::Cn),
        "en" => Ok(StoreLang::En),
        "all" => Ok(StoreLang::All),
        other => Err(format!("unknown language {other:?} (expected cn|en|all)")),
    }
}

pub fn run(args: &BuildArgs) -> Result<()> {
    let vocab = load_vocab(&args.vocab)?;
    let embeddings = load_embeddings(&args.embeddings)?;
    let logits = load_logits(&args.logits, &vocab)?;
    if embeddings.frames() != logits.frames() {
        return Err(CliError::usage(format!(
            "{} has {} frames but {} has {}",
            args.embeddings.display(),
            embeddings.frames(),
            args.logits.display(),
            logits.frames()
        )));
    }
    let ds = build(&embeddings, &logits, args.lang, &vocab)?;
    write_store(&args.out, &ds)?;

    let mut blank = 0u64;
    let mut cn = 0u64;
    let mut en = 0u64;
    for &v in ds.values() {
        match vocab.class_of(v) {
            Some(TokenClass::Blank) => blank += 1,
            Some(TokenClass::Lang(knnctc_core::LanguageTag::Cn)) => cn += 1,
            Some(TokenClass::Lang(knnctc_core::LanguageTag::En)) => en += 1,
            None => unreachable!("values validated at build"),
        }
    }
    println!(
        "entries={} dim={} lang={} labels: blank={blank} cn={cn} en={en}",
        ds.count(),
        ds.dim(),
        ds.lang()
    );
    Ok(())
}
