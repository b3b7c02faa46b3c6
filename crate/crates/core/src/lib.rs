//! Signal-processing voice anonymization and the objective privacy/utility
//! metrics used to evaluate it.
//!
//! - [`audio`]: waveforms, WAV I/O, framing, resampling
//! - [`dsp`]: LPC, pole manipulation, overlap-add, phase-vocoder TSM
//! - [`anonymize`]: McAdams and pitch-shift anonymizers, pseudo-speakers
//! - [`pitch`]: F0 tracking, pitch correlation, DTW realignment
//! - [`asv`]: embeddings, scoring, EER, attack scenarios, G_VD
//! - [`asr`]: word error rate
//! - [`protocol`]: manifests, conditions, reports
//! - [`synth`]: seeded synthetic corpora

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anonymize;
pub mod asr;
pub mod asv;
pub mod audio;
pub mod dsp;
pub mod pitch;
pub mod protocol;
pub mod synth;

#[cfg(test)]
pub(crate) mod test_support;

use thiserror::Error;

pub use anonymize::{
    anonymize_corpus, assign_pseudo_speaker, mcadams_anonymize, pitch_shift_anonymize, AnonError,
    AnonymizationConfig, Level, Method, PseudoSpeaker, DEFAULT_SEED,
};
pub use asr::{corpus_wer, normalize_text, wer, AsrError, Transcripts, WerBreakdown};
pub use asv::{
    compute_eer, gain_voice_distinctiveness, run_attack, AsvError, EerResult, Embedding, Gvd,
    Scenario, ScoreSet, SimilarityMatrix, TrialSet,
};
pub use audio::{read_wav, write_wav, AudioError, FrameConfig, Waveform, Window};
pub use dsp::{DspError, LpcModel, PoleSet};
pub use pitch::{pitch_correlation, PitchContour, PitchError, WarpPath};
pub use protocol::{load_manifest, EvaluationCondition, EvaluationReport, Manifest, ProtocolError};
pub use synth::SynthError;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Anon(#[from] AnonError),
    #[error(transparent)]
    Pitch(#[from] PitchError),
    #[error(transparent)]
    Asv(#[from] AsvError),
    #[error(transparent)]
    Asr(#[from] AsrError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate version, echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
