//! Speaker-verification scoring, EER, attack scenarios and the voice
//! distinctiveness metrics.

mod attack;
mod eer;
mod embedding;
mod scoring;
mod similarity;
mod trials;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::anonymize::AnonError;
use crate::audio::AudioError;
use crate::protocol::ProtocolError;

pub use attack::{run_attack, speaker_groups, AttackConfig, AttackResult, Scenario};
pub use eer::{compute_eer, eer_from_scores, EerResult};
pub use embedding::{
    embed_manifest, embed_waveforms, extract_embedding, Embedding, EmbeddingConfig, EMBEDDING_DIM,
    MIN_EMBEDDING_MS,
};
pub use scoring::{
    enroll_speaker, score_trial, Backend, CosineScorer, Scorer, DEFAULT_SCORE_SCALE,
};
pub use similarity::{
    diagonal_dominance, gain_voice_distinctiveness, similarity_matrix, Gvd, SimilarityMatrix,
};
pub use trials::{Label, ScoreSet, Trial, TrialSet};

#[derive(Debug, Error)]
pub enum AsvError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid attack configuration: {0}")]
    Config(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Anon(#[from] AnonError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
