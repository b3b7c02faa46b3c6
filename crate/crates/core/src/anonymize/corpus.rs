use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{anonymize, assign_pseudo_speaker, AnonError, AnonymizationConfig, PseudoSpeaker};
use crate::audio::{encode_wav, read_wav, Waveform};
use crate::protocol::{Manifest, ManifestEntry, ProtocolError};

/// Output of a corpus run: the rewritten manifest and the parameters used
/// for each utterance, both in input order.
#[derive(Debug, Clone)]
pub struct CorpusAnonymization {
    pub manifest: Manifest,
    pub params: Vec<(String, PseudoSpeaker)>,
}

/// Reads and anonymizes one manifest entry.
pub fn anonymize_entry(
    manifest: &Manifest,
    entry: &ManifestEntry,
    cfg: &AnonymizationConfig,
) -> Result<(PseudoSpeaker, Waveform), AnonError> {
    let params = assign_pseudo_speaker(cfg, &entry.speaker_id, &entry.utterance_id)?;
    let w = read_wav(manifest.resolve(entry))?;
    Ok((params, anonymize(&w, &params, cfg)?))
}

fn collect_failures<T>(
    manifest: &Manifest,
    results: Vec<Result<T, AnonError>>,
) -> Result<Vec<T>, AnonError> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (entry, r) in manifest.entries().iter().zip(results) {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failures.push((entry.utterance_id.clone(), e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(ok)
    } else {
        Err(AnonError::Corpus(failures))
    }
}

/// Anonymizes every utterance without touching the file system.
pub fn anonymize_manifest_in_memory(
    manifest: &Manifest,
    cfg: &AnonymizationConfig,
) -> Result<Vec<Waveform>, AnonError> {
    cfg.validate()?;
    let results: Vec<_> = manifest
        .entries()
        .par_iter()
        .map(|e| anonymize_entry(manifest, e, cfg).map(|(_, w)| w))
        .collect();
    collect_failures(manifest, results)
}

fn file_stem_for(utterance_id: &str) -> String {
    utterance_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Anonymizes a corpus into `out_dir`.
///
/// Writes `<utterance>.wav` per entry and `manifest.tsv` listing them with
/// the original ids and transcripts. Every utterance is attempted; if any
/// fails, all failures are reported together and no manifest is written.
pub fn anonymize_corpus(
    manifest: &Manifest,
    cfg: &AnonymizationConfig,
    out_dir: impl AsRef<Path>,
) -> Result<CorpusAnonymization, AnonError> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|source| ProtocolError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut names: HashMap<String, &str> = HashMap::new();
    for e in manifest.entries() {
        let name = format!("{}.wav", file_stem_for(&e.utterance_id));
        if let Some(other) = names.insert(name.clone(), &e.utterance_id) {
            return Err(AnonError::InvalidConfig(format!(
                "utterance ids {other:?} and {:?} map to the same file name {name}",
                e.utterance_id
            )));
        }
    }

    let results: Vec<_> = manifest
        .entries()
        .par_iter()
        .map(|e| {
            let (params, w) = anonymize_entry(manifest, e, cfg)?;
            let rel = PathBuf::from(format!("{}.wav", file_stem_for(&e.utterance_id)));
            let path = out_dir.join(&rel);
            fs::write(&path, encode_wav(&w))
                .map_err(|source| ProtocolError::Io { path, source })?;
            Ok((params, rel))
        })
        .collect();
    let done = collect_failures(manifest, results)?;

    let mut entries = Vec::with_capacity(done.len());
    let mut params = Vec::with_capacity(done.len());
    for (e, (p, rel)) in manifest.entries().iter().zip(done) {
        entries.push(ManifestEntry {
            path: rel,
            ..e.clone()
        });
        params.push((e.utterance_id.clone(), p));
    }
    let out = Manifest::new(manifest.dataset_name(), out_dir, entries)?;
    out.write(out_dir.join("manifest.tsv"))?;
    log::info!(
        "anonymized {} utterances ({}, level {}, seed {})",
        out.len(),
        cfg.method,
        cfg.level,
        cfg.seed
    );
    Ok(CorpusAnonymization {
        manifest: out,
        params,
    })
}
