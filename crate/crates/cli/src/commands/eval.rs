//! `knnctc eval`: corpus-level MER / CER / WER / RTF from hypotheses and a
//! manifest. RTF comes from the decode timing sidecar when available.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use knnctc_core::{align_units, rtf, tokenize_mixed, EvalReport, LanguageTag, MerStats};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::manifest::{read_hyps, read_manifest, read_timings, timing_path};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Hypotheses (JSON Lines with id + hyp), as written by decode
    #[arg(long)]
    pub hyp: PathBuf,
    /// Manifest carrying the references
    #[arg(long)]
    pub manifest: PathBuf,
    /// Timing sidecar; defaults to the path decode derives from --hyp
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Also write the report as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReportJson {
    mer: f64,
    cer_cn: f64,
    wer_en: f64,
    subs_cn: u64,
    dels_cn: u64,
    ins_cn: u64,
    subs_en: u64,
    dels_en: u64,
    ins_en: u64,
    rtf: f64,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let entries = read_manifest(&args.manifest)?;
    if entries.is_empty() {
        return Err(CliError::usage(format!(
            "{}: empty manifest",
            args.manifest.display()
        )));
    }
    let mut hyps: BTreeMap<String, String> = BTreeMap::new();
    for h in read_hyps(&args.hyp)? {
        if hyps.insert(h.id.clone(), h.hyp).is_some() {
            return Err(CliError::usage(format!(
                "{}: duplicate hypothesis id {:?}",
                args.hyp.display(),
                h.id
            )));
        }
    }
    let missing: Vec<&str> = entries
        .iter()
        .filter(|e| !hyps.contains_key(&e.id))
        .map(|e| e.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::usage(format!(
            "{}: missing hypotheses for ids: {}",
            args.hyp.display(),
            missing.join(", ")
        )));
    }

    let mut stats = MerStats::default();
    for entry in &entries {
        let reference = tokenize_mixed(&entry.reference);
        let hypothesis = tokenize_mixed(&hyps[&entry.id]);
        stats += MerStats {
            counts: align_units(&reference, &hypothesis),
            ref_units_cn: reference.count(LanguageTag::Cn),
            ref_units_en: reference.count(LanguageTag::En),
        };
    }

    let timing = args.timing.clone().unwrap_or_else(|| timing_path(&args.hyp));
    let rtf_value = if timing.exists() {
        let mut wall = 0.0;
        let mut audio = 0.0;
        for t in read_timings(&timing)? {
            wall += t.wall_seconds;
            audio += t.audio_seconds;
        }
        rtf(wall, audio)?
    } else {
        eprintln!(
            "warning: no timing sidecar at {}; reporting rtf=0",
            timing.display()
        );
        0.0
    };

    let report = EvalReport::from_stats(&stats, rtf_value)?;
    print!("{}", report.render_text());
    if let Some(json_path) = &args.json {
        let c = &report.counts;
        let json = ReportJson {
            mer: report.mer,
            cer_cn: report.cer_cn,
            wer_en: report.wer_en,
            subs_cn: c.subs_cn,
            dels_cn: c.dels_cn,
            ins_cn: c.ins_cn,
            subs_en: c.subs_en,
            dels_en: c.dels_en,
            ins_en: c.ins_en,
            rtf: report.rtf,
        };
        let text = serde_json::to_string_pretty(&json)
            .map_err(|e| CliError::data(e.to_string()))?;
        std::fs::write(json_path, text + "\n")
            .map_err(|e| CliError::usage_in(json_path, e))?;
    }
    Ok(())
}
