//! `knnctc decode`: run one decode mode over a manifest of utterances.
//!
//! Writes hypotheses as JSON Lines plus a timing sidecar
//! (`<out>.timing.jsonl` with the dot-extension swapped) whose wall seconds
//! cover each utterance's tensor loading, fusion, greedy decoding and
//! serialization. Audio seconds are frames x --frame-ms.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use knnctc_core::{
    decode_utterance, greedy_decode, DecodeMode, FusionConfig, FusionStores, KnnIndex,
    Vocabulary,
};
use rayon::prelude::*;

use crate::commands::{load_embeddings, load_logits, load_store_for_role, load_vocab};
use crate::config::{self, DecodeConfigFile};
use crate::error::{CliError, Result};
use crate::manifest::{
    read_manifest, resolve_relative, timing_path, write_jsonl, HypEntry, ManifestEntry,
    TimingEntry,
};

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Test manifest (JSON Lines)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Vocabulary file
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Decode mode: s0 (CTC only), s1 (single store), s2 (gated dual),
    /// s3 (gated dual + alternate-language scaling)
    #[arg(long)]
    pub mode: Option<String>,
    /// Chinese datastore (modes s2, s3)
    #[arg(long)]
    pub store_cn: Option<PathBuf>,
    /// English datastore (modes s2, s3)
    #[arg(long)]
    pub store_en: Option<PathBuf>,
    /// Bilingual datastore (mode s1)
    #[arg(long)]
    pub store_all: Option<PathBuf>,
    /// Neighbors retrieved per store [default: 1024]
    #[arg(long)]
    pub k: Option<usize>,
    /// Top-n neighbors averaged for gating [default: 10]
    #[arg(long)]
    pub n: Option<usize>,
    /// kNN softmax temperature [default: 1.0]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Interpolation weight of the kNN distribution [default: 0.25]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Scale temperature for the non-selected language [default: 5.0]
    #[arg(long)]
    pub t: Option<f64>,
    /// Hypothesis output path (JSON Lines)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Frame duration in milliseconds for audio-second accounting
    /// [default: 40]
    #[arg(long)]
    pub frame_ms: Option<f64>,
    /// Worker threads for utterance-level parallel decoding [default: 1]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Optional JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

struct Settings {
    cfg: FusionConfig,
    manifest: PathBuf,
    vocab: PathBuf,
    out: PathBuf,
    store_cn: Option<PathBuf>,
    store_en: Option<PathBuf>,
    store_all: Option<PathBuf>,
    frame_ms: f64,
    threads: usize,
}

fn resolve(args: &DecodeArgs) -> Result<Settings> {
    let file = match &args.config {
        Some(path) => DecodeConfigFile::load(path)?,
        None => DecodeConfigFile::default(),
    };
    let mode_str = args
        .mode
        .clone()
        .or(file.mode)
        .ok_or_else(|| CliError::usage("--mode is required (s0|s1|s2|s3)"))?;
    let mode = DecodeMode::parse(&mode_str)?;
    let cfg = FusionConfig {
        k: args.k.or(file.k).unwrap_or(config::DEFAULT_K),
        n: args.n.or(file.n).unwrap_or(config::DEFAULT_N),
        tau: args.tau.or(file.tau).unwrap_or(config::DEFAULT_TAU),
        lambda: args.lambda.or(file.lambda).unwrap_or(config::DEFAULT_LAMBDA),
        t: args.t.or(file.t).unwrap_or(config::DEFAULT_T),
        mode,
    };
    cfg.validate()?;
    let frame_ms = args
        .frame_ms
        .or(file.frame_ms)
        .unwrap_or(config::DEFAULT_FRAME_MS);
    if !(frame_ms > 0.0) || !frame_ms.is_finite() {
        return Err(CliError::usage("--frame-ms must be > 0"));
    }
    let threads = args
        .threads
        .or(file.threads)
        .unwrap_or(config::DEFAULT_THREADS);
    if threads == 0 {
        return Err(CliError::usage("--threads must be >= 1"));
    }
    Ok(Settings {
        cfg,
        manifest: args
            .manifest
            .clone()
            .or(file.manifest)
            .ok_or_else(|| CliError::usage("--manifest is required"))?,
        vocab: args
            .vocab
            .clone()
            .or(file.vocab)
            .ok_or_else(|| CliError::usage("--vocab is required"))?,
        out: args
            .out
            .clone()
            .or(file.out)
            .ok_or_else(|| CliError::usage("--out is required"))?,
        store_cn: args.store_cn.clone().or(file.store_cn),
        store_en: args.store_en.clone().or(file.store_en),
        store_all: args.store_all.clone().or(file.store_all),
        frame_ms,
        threads,
    })
}

struct LoadedStores {
    all: Option<KnnIndex>,
    cn: Option<KnnIndex>,
    en: Option<KnnIndex>,
}

fn load_stores(settings: &Settings, vocab: &Vocabulary) -> Result<LoadedStores> {
    use knnctc_core::StoreLang;
    let need = |path: &Option<PathBuf>, flag: &str| -> Result<PathBuf> {
        path.clone().ok_or_else(|| {
            CliError::usage(format!("mode {} requires {flag}", settings.cfg.mode))
        })
    };
    let mut stores = LoadedStores {
        all: None,
        cn: None,
        en: None,
    };
    match settings.cfg.mode {
        DecodeMode::CtcOnly => {}
        DecodeMode::SingleStore => {
            let path = need(&settings.store_all, "--store-all")?;
            let (_, idx) = load_store_for_role(&path, StoreLang::All, vocab, settings.cfg.k)?;
            stores.all = Some(idx);
        }
        DecodeMode::GatedDual | DecodeMode::GatedDualScaled => {
            let cn_path = need(&settings.store_cn, "--store-cn")?;
            let en_path = need(&settings.store_en, "--store-en")?;
            let (cn_ds, cn_idx) =
                load_store_for_role(&cn_path, StoreLang::Cn, vocab, settings.cfg.k)?;
            let (en_ds, en_idx) =
                load_store_for_role(&en_path, StoreLang::En, vocab, settings.cfg.k)?;
            if cn_ds.dim() != en_ds.dim() {
                return Err(CliError::usage(format!(
                    "store dimensions disagree: {} is {}-d, {} is {}-d",
                    cn_path.display(),
                    cn_ds.dim(),
                    en_path.display(),
                    en_ds.dim()
                )));
            }
            stores.cn = Some(cn_idx);
            stores.en = Some(en_idx);
        }
    }
    Ok(stores)
}

fn process_utterance(
    entry: &ManifestEntry,
    manifest_path: &Path,
    stores: &FusionStores<'_>,
    vocab: &Vocabulary,
    cfg: &FusionConfig,
    frame_ms: f64,
) -> Result<(HypEntry, TimingEntry)> {
    let started = Instant::now();
    let embeddings = load_embeddings(&resolve_relative(manifest_path, &entry.embeddings))?;
    let logits = load_logits(&resolve_relative(manifest_path, &entry.logits), vocab)?;
    if embeddings.frames() != logits.frames() {
        return Err(CliError::usage(format!(
            "utterance {}: embeddings have {} frames, logits {}",
            entry.id,
            embeddings.frames(),
            logits.frames()
        )));
    }
    let decoded = decode_utterance(&embeddings, &logits, stores, vocab, cfg)?;
    let hyp = greedy_decode(&decoded.dists, vocab)?;
    let hyp_entry = HypEntry {
        id: entry.id.clone(),
        hyp: hyp.text,
    };
    // Serialization is charged to the utterance; only the file write is not.
    let _len = serde_json::to_string(&hyp_entry)
        .map_err(|e| CliError::data(e.to_string()))?
        .len();
    let wall_seconds = started.elapsed().as_secs_f64();
    Ok((
        hyp_entry,
        TimingEntry {
            id: entry.id.clone(),
            wall_seconds,
            audio_seconds: embeddings.frames() as f64 * frame_ms / 1000.0,
            fallback_frames: decoded.fallback_frames as u64,
        },
    ))
}

pub fn run(args: &DecodeArgs) -> Result<()> {
    let settings = resolve(args)?;
    let vocab = load_vocab(&settings.vocab)?;
    let loaded = load_stores(&settings, &vocab)?;
    let stores = FusionStores {
        all: loaded.all.as_ref(),
        cn: loaded.cn.as_ref(),
        en: loaded.en.as_ref(),
    };
    let cfg = settings.cfg;
    eprintln!(
        "config: mode={} k={} n={} tau={} lambda={} t={} frame_ms={} threads={}",
        cfg.mode, cfg.k, cfg.n, cfg.tau, cfg.lambda, cfg.t, settings.frame_ms, settings.threads
    );

    let entries = read_manifest(&settings.manifest)?;
    let results: Vec<Result<(HypEntry, TimingEntry)>> = if settings.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build()
            .map_err(|e| CliError::usage(e.to_string()))?;
        pool.install(|| {
            entries
                .par_iter()
                .map(|entry| {
                    process_utterance(
                        entry,
                        &settings.manifest,
                        &stores,
                        &vocab,
                        &cfg,
                        settings.frame_ms,
                    )
                })
                .collect()
        })
    } else {
        entries
            .iter()
            .map(|entry| {
                process_utterance(
                    entry,
                    &settings.manifest,
                    &stores,
                    &vocab,
                    &cfg,
                    settings.frame_ms,
                )
            })
            .collect()
    };

    let mut hyps = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    let mut fallbacks = 0u64;
    for result in results {
        let (hyp, timing) = result?;
        fallbacks += timing.fallback_frames;
        hyps.push(hyp);
        timings.push(timing);
    }
    write_jsonl(&settings.out, &hyps)?;
    write_jsonl(&timing_path(&settings.out), &timings)?;
    if fallbacks > 0 {
        eprintln!("warning: {fallbacks} frames fell back to the pure CTC distribution");
    }
    println!(
        "decoded {} utterances (mode {}) -> {}",
        hyps.len(),
        cfg.mode,
        settings.out.display()
    );
    Ok(())
}
