use serde::{Deserialize, Serialize};

use super::{PitchContour, PitchError, MAX_F0, MIN_F0};
use crate::audio::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchConfig {
    pub hop_ms: f64,
    pub threshold: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    /// Frames quieter than this (RMS, dB re full scale) are unvoiced.
    pub silence_dbfs: f64,
    /// Frames more than this many dB below the loudest frame are unvoiced;
    /// 0 disables the relative floor.
    pub voicing_range_db: f64,
    /// Voiced runs shorter than this many frames are cleared.
    pub min_voiced_frames: usize,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            hop_ms: 10.0,
            threshold: 0.15,
            f0_min: MIN_F0,
            f0_max: MAX_F0,
            silence_dbfs: -60.0,
            voicing_range_db: 30.0,
            min_voiced_frames: 3,
        }
    }
}

impl PitchConfig {
    fn validate(&self) -> Result<(), PitchError> {
        if !(self.hop_ms > 0.0
            && self.threshold > 0.0
            && MIN_F0 <= self.f0_min
            && self.f0_min < self.f0_max
            && self.f0_max <= MAX_F0
            && self.voicing_range_db >= 0.0
            && self.voicing_range_db.is_finite())
        {
            return Err(PitchError::InvalidParameter(format!(
                "bad pitch config {self:?}"
            )));
        }
        Ok(())
    }
}

/// Clears voiced runs shorter than `min` frames.
fn drop_short_runs(f0: &mut [f64], min: usize) {
    let mut i = 0;
    while i < f0.len() {
        if f0[i] <= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < f0.len() && f0[i] > 0.0 {
            i += 1;
        }
        if i - start < min {
            f0[start..i].fill(0.0);
        }
    }
}

/// YIN estimate for one analysis window `x` of length `w + tau_max`.
fn yin_frame(x: &[f64], w: usize, tau_min: usize, tau_max: usize, threshold: f64) -> Option<f64> {
    let mut d = vec![0.0; tau_max + 2];
    for (tau, dv) in d.iter_mut().enumerate().skip(1) {
        let mut s = 0.0;
        for j in 0..w {
            let diff = x[j] - x[j + tau];
            s += diff * diff;
        }
        *dv = s;
    }
    // cumulative-mean-normalised difference
    let mut cmnd = vec![1.0; tau_max + 2];
    let mut running = 0.0;
    for tau in 1..d.len() {
        running += d[tau];
        cmnd[tau] = if running > 0.0 {
            d[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
    let mut tau = tau_min;
    while tau <= tau_max {
        if cmnd[tau] < threshold {
            while tau < tau_max && cmnd[tau + 1] < cmnd[tau] {
                tau += 1;
            }
            let refined = if tau > 1 && tau < tau_max + 1 {
                let (a, b, c) = (cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]);
                let denom = a - 2.0 * b + c;
                if denom.abs() > 1e-12 {
                    tau as f64 + (0.5 * (a - c) / denom).clamp(-1.0, 1.0)
                } else {
                    tau as f64
                }
            } else {
                tau as f64
            };
            return Some(refined);
        }
        tau += 1;
    }
    None
}

/// YIN-style F0 tracker with one estimate every `cfg.hop_ms`.
///
/// Frame `i` is centred on sample `i * hop`; the contour has
/// `ceil(len / hop)` frames. A frame is voiced when the normalised
/// difference function dips below the threshold inside the search range and
/// the frame RMS is above both the absolute silence floor and
/// `voicing_range_db` under the loudest frame.
pub fn estimate_f0(w: &Waveform, cfg: &PitchConfig) -> Result<PitchContour, PitchError> {
    cfg.validate()?;
    let sr = w.sample_rate() as f64;
    if w.sample_rate() < 8000 {
        return Err(PitchError::InvalidParameter(format!(
            "sample rate must be >= 8000 Hz, got {}",
            w.sample_rate()
        )));
    }
    let hop = w.ms_to_samples(cfg.hop_ms).max(1);
    let tau_min = (sr / cfg.f0_max).floor().max(2.0) as usize;
    let tau_max = (sr / cfg.f0_min).ceil() as usize;
    let win = tau_max;
    let span = win + tau_max + 2;
    let x = w.samples();
    let n_frames = x.len().div_ceil(hop);
    let silence = 10f64.powf(cfg.silence_dbfs / 20.0);

    let frames: Vec<Vec<f64>> = (0..n_frames)
        .map(|i| {
            let start = (i * hop) as i64 - (span / 2) as i64;
            (0..span)
                .map(|k| {
                    let idx = start + k as i64;
                    if idx >= 0 && (idx as usize) < x.len() {
                        x[idx as usize]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let rms: Vec<f64> = frames
        .iter()
        .map(|b| (b.iter().map(|v| v * v).sum::<f64>() / span as f64).sqrt())
        .collect();
    let loudest = rms.iter().fold(0.0f64, |m, &r| m.max(r));
    let floor = if cfg.voicing_range_db > 0.0 {
        silence.max(loudest * 10f64.powf(-cfg.voicing_range_db / 20.0))
    } else {
        silence
    };

    let mut f0 = vec![0.0; n_frames];
    for ((out, buf), &r) in f0.iter_mut().zip(&frames).zip(&rms) {
        if r <= floor {
            continue;
        }
        if let Some(tau) = yin_frame(buf, win, tau_min, tau_max, cfg.threshold) {
            let f = sr / tau;
            if (cfg.f0_min..=cfg.f0_max).contains(&f) {
                *out = f;
            }
        }
    }
    drop_short_runs(&mut f0, cfg.min_voiced_frames);
    PitchContour::new(f0, cfg.hop_ms)
}
