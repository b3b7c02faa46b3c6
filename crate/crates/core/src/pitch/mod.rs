//! F0 estimation, the pitch-correlation metric and DTW realignment.

mod corpus;
mod correlation;
mod dtw;
mod yin;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;
use crate::protocol::ProtocolError;

pub use corpus::{corpus_pitch_correlation, utterance_pitch, CorpusPitch, UtterancePitch};
pub use correlation::{pitch_correlation, MIN_JOINT_VOICED};
pub use dtw::{dtw_align, dtw_pitch_correlation, WarpPath, VOICING_MISMATCH_COST};
pub use yin::{estimate_f0, PitchConfig};

pub const MIN_F0: f64 = 50.0;
pub const MAX_F0: f64 = 600.0;

#[derive(Debug, Error)]
pub enum PitchError {
    #[error("invalid pitch contour: {0}")]
    InvalidContour(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot align contours: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Frame-wise F0 in Hz, 0 on unvoiced frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchContour {
    f0: Vec<f64>,
    hop_ms: f64,
}

impl PitchContour {
    /// Builds a contour from F0 values; frames with `f0 == 0` are unvoiced
    /// and every other value must lie in `[MIN_F0, MAX_F0]`.
    pub fn new(f0: Vec<f64>, hop_ms: f64) -> Result<Self, PitchError> {
        if !(hop_ms > 0.0) {
            return Err(PitchError::InvalidContour(format!(
                "hop_ms must be positive, got {hop_ms}"
            )));
        }
        if let Some((i, v)) = f0
            .iter()
            .enumerate()
            .find(|(_, &v)| v != 0.0 && !(MIN_F0..=MAX_F0).contains(&v))
        {
            return Err(PitchError::InvalidContour(format!(
                "frame {i}: f0 {v} outside [{MIN_F0}, {MAX_F0}]"
            )));
        }
        Ok(Self { f0, hop_ms })
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn hop_ms(&self) -> f64 {
        self.hop_ms
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn is_voiced(&self, i: usize) -> bool {
        self.f0[i] > 0.0
    }

    pub fn voiced(&self) -> Vec<bool> {
        self.f0.iter().map(|&v| v > 0.0).collect()
    }

    pub fn voiced_count(&self) -> usize {
        self.f0.iter().filter(|&&v| v > 0.0).count()
    }
}
