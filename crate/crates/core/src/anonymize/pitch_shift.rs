use super::{AnonError, AnonymizationConfig};
use crate::audio::{resample, Waveform};
use crate::dsp::pv_tsm;

pub const MAX_SEMITONES: f64 = 12.0;

/// Pitch shift by resampling followed by phase-vocoder time stretching.
///
/// Resampling by `2^(-semitones/12)` scales pitch and duration together;
/// PV-TSM by the inverse ratio restores the duration. The result is cut or
/// zero-padded to exactly the input length.
pub fn pitch_shift_anonymize(
    w: &Waveform,
    semitones: f64,
    _cfg: &AnonymizationConfig,
) -> Result<Waveform, AnonError> {
    if !semitones.is_finite() || semitones.abs() > MAX_SEMITONES {
        return Err(AnonError::InvalidConfig(format!(
            "pitch shift must be within +-{MAX_SEMITONES} semitones, got {semitones}"
        )));
    }
    if w.is_empty() {
        return Ok(w.clone());
    }
    let ratio = 2f64.powf(-semitones / 12.0);
    let resampled = resample(w, ratio)?;
    let stretched = pv_tsm(&resampled, 1.0 / ratio)?;
    let mut samples = stretched.into_samples();
    samples.resize(w.len(), 0.0);
    Ok(Waveform::new(samples, w.sample_rate())?)
}
