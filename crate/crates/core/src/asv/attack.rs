use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    compute_eer, embed_manifest, embed_waveforms, enroll_speaker, AsvError, Backend, CosineScorer,
    EerResult, Embedding, EmbeddingConfig, ScoreSet, Scorer, TrialSet,
};
use crate::anonymize::{anonymize_manifest_in_memory, derive_seed, AnonymizationConfig, Level};
use crate::protocol::{Manifest, ProtocolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Raw enrollment against raw trials.
    Unprotected,
    /// Anonymized trials against enrollment the attacker anonymized with its
    /// own seed, scored by a backend fitted on utterance-level anonymized
    /// data.
    SemiInformed,
}

#[derive(Debug, Clone)]
pub struct AttackConfig {
    /// The user's anonymization; its seed is the user seed.
    pub anonymization: AnonymizationConfig,
    pub attacker_seed: u64,
    /// True when the trial manifest already points at anonymized audio.
    pub trials_anonymized: bool,
    /// Backend training data; defaults to the enrollment manifest.
    pub training: Option<Manifest>,
    pub embedding: EmbeddingConfig,
    pub scorer: CosineScorer,
}

impl AttackConfig {
    /// Attacker seed derived from the user seed, so the two always differ.
    pub fn new(anonymization: AnonymizationConfig) -> Self {
        Self {
            attacker_seed: derive_seed(anonymization.seed, "attacker"),
            anonymization,
            trials_anonymized: false,
            training: None,
            embedding: EmbeddingConfig::default(),
            scorer: CosineScorer::default(),
        }
    }

    fn attacker_anonymization(&self, level: Level) -> AnonymizationConfig {
        AnonymizationConfig {
            level,
            seed: self.attacker_seed,
            ..self.anonymization.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackResult {
    pub eer: EerResult,
    pub scores: ScoreSet,
}

fn group_by_speaker<'a>(
    m: &'a Manifest,
    embeddings: &'a [Embedding],
) -> BTreeMap<&'a str, Vec<Embedding>> {
    let mut out: BTreeMap<&str, Vec<Embedding>> = BTreeMap::new();
    for (e, emb) in m.entries().iter().zip(embeddings) {
        out.entry(e.speaker_id.as_str())
            .or_default()
            .push(emb.clone());
    }
    out
}

fn apply_all(backend: &Backend, es: &[Embedding]) -> Result<Vec<Embedding>, AsvError> {
    es.iter().map(|e| backend.apply(e)).collect()
}

/// Scores `trials` under an attack scenario and computes the EER.
pub fn run_attack(
    scenario: Scenario,
    enroll: &Manifest,
    trial: &Manifest,
    trials: &TrialSet,
    cfg: &AttackConfig,
) -> Result<AttackResult, AsvError> {
    let enroll_speakers: HashMap<&str, ()> = enroll
        .entries()
        .iter()
        .map(|e| (e.speaker_id.as_str(), ()))
        .collect();
    for t in trials.trials() {
        if !enroll_speakers.contains_key(t.enroll_speaker.as_str()) {
            return Err(ProtocolError::Unpaired(format!(
                "trial speaker {} has no enrollment utterances",
                t.enroll_speaker
            ))
            .into());
        }
        if trial.get(&t.trial_utterance).is_none() {
            return Err(ProtocolError::Unpaired(format!(
                "trial utterance {} is not in the trial manifest",
                t.trial_utterance
            ))
            .into());
        }
    }
    let training = cfg.training.as_ref().unwrap_or(enroll);

    let (enroll_emb, trial_emb, train_emb) = match scenario {
        Scenario::Unprotected => (
            embed_manifest(enroll, &cfg.embedding)?,
            embed_manifest(trial, &cfg.embedding)?,
            embed_manifest(training, &cfg.embedding)?,
        ),
        Scenario::SemiInformed => {
            if cfg.attacker_seed == cfg.anonymization.seed {
                return Err(AsvError::Config(
                    "attacker seed must differ from the user seed".into(),
                ));
            }
            cfg.anonymization.validate()?;
            let trial_emb = if cfg.trials_anonymized {
                embed_manifest(trial, &cfg.embedding)?
            } else {
                let ws = anonymize_manifest_in_memory(trial, &cfg.anonymization)?;
                embed_waveforms(&ws, &cfg.embedding)?
            };
            let enroll_ws =
                anonymize_manifest_in_memory(enroll, &cfg.attacker_anonymization(Level::Speaker))?;
            let train_ws = anonymize_manifest_in_memory(
                training,
                &cfg.attacker_anonymization(Level::Utterance),
            )?;
            (
                embed_waveforms(&enroll_ws, &cfg.embedding)?,
                trial_emb,
                embed_waveforms(&train_ws, &cfg.embedding)?,
            )
        }
    };

    let backend = Backend::fit(&train_emb)?;
    let enroll_emb = apply_all(&backend, &enroll_emb)?;
    let trial_emb = apply_all(&backend, &trial_emb)?;

    let models: BTreeMap<&str, Embedding> = group_by_speaker(enroll, &enroll_emb)
        .into_iter()
        .map(|(spk, es)| enroll_speaker(&es).map(|m| (spk, m)))
        .collect::<Result<_, _>>()?;
    let trial_index: HashMap<&str, usize> = trial
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.utterance_id.as_str(), i))
        .collect();

    let scores = trials
        .trials()
        .par_iter()
        .map(|t| {
            let model = &models[t.enroll_speaker.as_str()];
            let probe = &trial_emb[trial_index[t.trial_utterance.as_str()]];
            cfg.scorer.score(model, probe)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scores = ScoreSet::new(scores, trials)?;
    let eer = compute_eer(&scores, trials)?;
    log::info!(
        "{scenario:?} attack: EER {:.4} over {} target / {} non-target trials",
        eer.eer,
        eer.n_target,
        eer.n_nontarget
    );
    Ok(AttackResult { eer, scores })
}

/// Utterance embeddings grouped by speaker, after the given backend.
pub fn speaker_groups(
    m: &Manifest,
    embeddings: &[Embedding],
    backend: &Backend,
) -> Result<Vec<(String, Vec<Embedding>)>, AsvError> {
    let normed = apply_all(backend, embeddings)?;
    Ok(group_by_speaker(m, &normed)
        .into_iter()
        .map(|(s, es)| (s.to_string(), es))
        .collect())
}
