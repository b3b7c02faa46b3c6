//! Voice anonymization: pseudo-speaker assignment, the McAdams-coefficient
//! LPC anonymizer, resampling + PV-TSM pitch shifting, and corpus runs.

mod corpus;
mod mcadams;
mod pitch_shift;
mod pseudo;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioError, Waveform};
use crate::dsp::DspError;
use crate::protocol::ProtocolError;

pub use corpus::{
    anonymize_corpus, anonymize_entry, anonymize_manifest_in_memory, CorpusAnonymization,
};
pub use mcadams::mcadams_anonymize;
pub use pitch_shift::{pitch_shift_anonymize, MAX_SEMITONES};
pub use pseudo::{assign_pseudo_speaker, derive_seed, derive_unit};

#[derive(Debug, Error)]
pub enum AnonError {
    #[error("invalid anonymization config: {0}")]
    InvalidConfig(String),
    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: DspError,
    },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{} utterance(s) failed: {}", .0.len(), format_failures(.0))]
    Corpus(Vec<(String, String)>),
}

fn format_failures(failures: &[(String, String)]) -> String {
    failures
        .iter()
        .map(|(utt, msg)| format!("{utt}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "mcadams", alias = "mc_adams")]
    McAdams,
    #[serde(alias = "pitch-shift")]
    PitchShift,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::McAdams => "mcadams",
            Method::PitchShift => "pitch_shift",
        })
    }
}

impl FromStr for Method {
    type Err = AnonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mcadams" => Ok(Method::McAdams),
            "pitch_shift" | "pitch-shift" => Ok(Method::PitchShift),
            other => Err(AnonError::InvalidConfig(format!(
                "unknown method {other:?}"
            ))),
        }
    }
}

/// Whether parameters are keyed by speaker (one pseudo-speaker per source
/// speaker) or by utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Speaker,
    Utterance,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Speaker => "speaker",
            Level::Utterance => "utterance",
        })
    }
}

impl FromStr for Level {
    type Err = AnonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "speaker" => Ok(Level::Speaker),
            "utterance" => Ok(Level::Utterance),
            other => Err(AnonError::InvalidConfig(format!("unknown level {other:?}"))),
        }
    }
}

/// The voice a source speaker (or utterance) is mapped to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PseudoSpeaker {
    McAdams { alpha: f64 },
    PitchShift { semitones: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnonymizationConfig {
    pub method: Method,
    pub level: Level,
    pub seed: u64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub shift_min: f64,
    pub shift_max: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub lpc_order: usize,
    /// Gaussian lag-window bandwidth for the LPC analysis; 0 disables it.
    pub lag_window_hz: f64,
}

pub const DEFAULT_SEED: u64 = 2022;

impl Default for AnonymizationConfig {
    fn default() -> Self {
        Self {
            method: Method::McAdams,
            level: Level::Speaker,
            seed: DEFAULT_SEED,
            alpha_min: 0.75,
            alpha_max: 0.9,
            shift_min: -8.0,
            shift_max: 8.0,
            frame_ms: 20.0,
            hop_ms: 10.0,
            lpc_order: 20,
            lag_window_hz: 0.0,
        }
    }
}

impl AnonymizationConfig {
    pub fn validate(&self) -> Result<(), AnonError> {
        let bad = |msg: String| Err(AnonError::InvalidConfig(msg));
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.alpha_max < 2.0) {
            return bad(format!(
                "need 0 < alpha_min < alpha_max < 2, got ({}, {})",
                self.alpha_min, self.alpha_max
            ));
        }
        if !(self.shift_min < self.shift_max
            && self.shift_min >= -MAX_SEMITONES
            && self.shift_max <= MAX_SEMITONES)
        {
            return bad(format!(
                "need -12 <= shift_min < shift_max <= 12, got ({}, {})",
                self.shift_min, self.shift_max
            ));
        }
        if !(self.frame_ms > 0.0 && self.hop_ms > 0.0 && self.hop_ms <= self.frame_ms) {
            return bad(format!(
                "need 0 < hop_ms <= frame_ms, got hop {} frame {}",
                self.hop_ms, self.frame_ms
            ));
        }
        if self.lpc_order < 2 {
            return bad(format!("lpc_order must be >= 2, got {}", self.lpc_order));
        }
        if !(self.lag_window_hz >= 0.0 && self.lag_window_hz.is_finite()) {
            return bad(format!(
                "lag_window_hz must be >= 0, got {}",
                self.lag_window_hz
            ));
        }
        Ok(())
    }
}

/// Applies the given pseudo-speaker to one waveform.
pub fn anonymize(
    w: &Waveform,
    params: &PseudoSpeaker,
    cfg: &AnonymizationConfig,
) -> Result<Waveform, AnonError> {
    match *params {
        PseudoSpeaker::McAdams { alpha } => mcadams_anonymize(w, alpha, cfg),
        PseudoSpeaker::PitchShift { semitones } => pitch_shift_anonymize(w, semitones, cfg),
    }
}
