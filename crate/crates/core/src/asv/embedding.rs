use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::AsvError;
use crate::audio::{frame_signal, read_wav, FrameConfig, Waveform, Window};
use crate::protocol::Manifest;

/// Mean and standard deviation of 20 cepstral coefficients.
pub const EMBEDDING_DIM: usize = 40;
pub const MIN_EMBEDDING_MS: f64 = 200.0;
const LOG_FLOOR: f64 = 1e-10;
/// Mel bands are floored 60 dB below the frame's strongest band.
const BAND_FLOOR: f64 = 1e-6;

/// A fixed-length speaker representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    vector: Vec<f64>,
    source_utts: usize,
}

impl Embedding {
    pub fn new(vector: Vec<f64>, source_utts: usize) -> Result<Self, AsvError> {
        if vector.is_empty() || vector.iter().any(|v| !v.is_finite()) {
            return Err(AsvError::InvalidInput(
                "embedding must be non-empty and finite".into(),
            ));
        }
        Ok(Self {
            vector,
            source_utts,
        })
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn source_utts(&self) -> usize {
        self.source_utts
    }

    pub fn norm(&self) -> f64 {
        self.vector.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Unit-length copy; fails on a zero vector.
    pub fn normalized(&self) -> Result<Self, AsvError> {
        let n = self.norm();
        if n <= f64::EPSILON {
            return Err(AsvError::InvalidInput(
                "cannot normalise a zero-norm embedding".into(),
            ));
        }
        Self::new(
            self.vector.iter().map(|v| v / n).collect(),
            self.source_utts,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_mels: usize,
    /// Cepstral coefficients kept, starting at c1.
    pub n_ceps: usize,
    /// Frames more than this many dB below the loudest frame are skipped;
    /// 0 keeps every frame.
    pub vad_range_db: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            window_ms: 25.0,
            hop_ms: 10.0,
            n_mels: 26,
            n_ceps: 20,
            vad_range_db: 40.0,
        }
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over `n_fft / 2 + 1` power-spectrum bins.
fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let top = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate / n_fft as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// MFCC statistics embedding.
///
/// Per 10 ms frame: 25 ms Hann window, power spectrum, 26 mel filters,
/// log with a floor 60 dB under the strongest band, DCT-II. Frames more than `vad_range_db` below the loudest one are
/// skipped. c0 is dropped so the embedding ignores overall level; the
/// frame-wise c1..c20 are summarised by mean and standard deviation and the
/// 40-dim result is length-normalised.
pub fn extract_embedding(w: &Waveform, cfg: &EmbeddingConfig) -> Result<Embedding, AsvError> {
    if w.duration_secs() * 1000.0 < MIN_EMBEDDING_MS {
        return Err(AsvError::InvalidInput(format!(
            "need at least {MIN_EMBEDDING_MS} ms of audio, got {:.1} ms",
            w.duration_secs() * 1000.0
        )));
    }
    if cfg.n_ceps == 0 || cfg.n_ceps >= cfg.n_mels {
        return Err(AsvError::InvalidInput(format!(
            "need 0 < n_ceps < n_mels, got {} and {}",
            cfg.n_ceps, cfg.n_mels
        )));
    }
    if !(cfg.vad_range_db >= 0.0 && cfg.vad_range_db.is_finite()) {
        return Err(AsvError::InvalidInput(format!(
            "vad_range_db must be >= 0, got {}",
            cfg.vad_range_db
        )));
    }
    let frame_len = w.ms_to_samples(cfg.window_ms).max(2);
    let hop = w.ms_to_samples(cfg.hop_ms).clamp(1, frame_len);
    let fc = FrameConfig::new(frame_len, hop, Window::Hann)?;
    let mut frames = frame_signal(w.samples(), &fc);
    if cfg.vad_range_db > 0.0 {
        let energy: Vec<f64> = frames
            .iter()
            .map(|f| f.iter().map(|x| x * x).sum())
            .collect();
        let floor =
            energy.iter().fold(0.0f64, |m, &e| m.max(e)) * 10f64.powf(-cfg.vad_range_db / 10.0);
        let mut keep = energy.iter().map(|&e| e > 0.0 && e >= floor);
        frames.retain(|_| keep.next().unwrap_or(false));
    }
    if frames.is_empty() {
        return Err(AsvError::InvalidInput(
            "no frames with signal energy".into(),
        ));
    }
    let n_fft = frame_len.next_power_of_two();
    let bank = mel_filterbank(cfg.n_mels, n_fft, w.sample_rate() as f64);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);

    let m = cfg.n_mels;
    let dct: Vec<Vec<f64>> = (1..=cfg.n_ceps)
        .map(|k| {
            (0..m)
                .map(|n| (PI * k as f64 * (n as f64 + 0.5) / m as f64).cos())
                .collect()
        })
        .collect();

    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut sum = vec![0.0; cfg.n_ceps];
    let mut sum_sq = vec![0.0; cfg.n_ceps];
    let mut log_mel = vec![0.0; m];
    for frame in &frames {
        for (b, &x) in buf
            .iter_mut()
            .zip(frame.iter().chain(std::iter::repeat(&0.0)))
        {
            *b = Complex64::new(x, 0.0);
        }
        fft.process(&mut buf);
        for (lm, filt) in log_mel.iter_mut().zip(&bank) {
            let e: f64 = filt.iter().zip(&buf).map(|(h, c)| h * c.norm_sqr()).sum();
            *lm = e;
        }
        // bands far below the strongest one carry only noise-floor detail
        let floor = log_mel
            .iter()
            .fold(LOG_FLOOR, |m, &e| m.max(e * BAND_FLOOR));
        for lm in log_mel.iter_mut() {
            *lm = lm.max(floor).ln();
        }
        for (k, basis) in dct.iter().enumerate() {
            let c: f64 = basis.iter().zip(&log_mel).map(|(b, l)| b * l).sum();
            sum[k] += c;
            sum_sq[k] += c * c;
        }
    }
    let n = frames.len() as f64;
    let mut v = Vec::with_capacity(2 * cfg.n_ceps);
    v.extend(sum.iter().map(|s| s / n));
    v.extend(
        sum.iter()
            .zip(&sum_sq)
            .map(|(s, sq)| (sq / n - (s / n) * (s / n)).max(0.0).sqrt()),
    );
    Embedding::new(v, 1)?.normalized()
}

/// Embeds waveforms in parallel; output order follows the input.
pub fn embed_waveforms(ws: &[Waveform], cfg: &EmbeddingConfig) -> Result<Vec<Embedding>, AsvError> {
    ws.par_iter().map(|w| extract_embedding(w, cfg)).collect()
}

/// Reads and embeds every utterance of a manifest, in manifest order.
pub fn embed_manifest(m: &Manifest, cfg: &EmbeddingConfig) -> Result<Vec<Embedding>, AsvError> {
    m.entries()
        .par_iter()
        .map(|e| extract_embedding(&read_wav(m.resolve(e))?, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{seeded_noise, sine};

    fn cosine(a: &Embedding, b: &Embedding) -> f64 {
        a.vector()
            .iter()
            .zip(b.vector())
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / (a.norm() * b.norm())
    }

    fn voiced(scale: f64) -> Waveform {
        let x: Vec<f64> = seeded_noise(3, 8000)
            .iter()
            .zip(sine(180.0, 16_000, 8000, 1.0))
            .map(|(n, s)| scale * (0.05 * n + 0.4 * s))
            .collect();
        Waveform::new(x, 16_000).unwrap()
    }

    #[test]
    fn dimension_and_norm() {
        let e = extract_embedding(&voiced(1.0), &EmbeddingConfig::default()).unwrap();
        assert_eq!(e.dim(), EMBEDDING_DIM);
        assert!((e.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let cfg = EmbeddingConfig::default();
        assert_eq!(
            extract_embedding(&voiced(1.0), &cfg).unwrap(),
            extract_embedding(&voiced(1.0), &cfg).unwrap()
        );
    }

    #[test]
    fn amplitude_scaling_is_invisible() {
        let cfg = EmbeddingConfig::default();
        let a = extract_embedding(&voiced(1.0), &cfg).unwrap();
        let b = extract_embedding(&voiced(0.5), &cfg).unwrap();
        assert!(cosine(&a, &b) > 0.99);
        for (x, y) in a.vector().iter().zip(b.vector()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_and_sine_are_separated() {
        let cfg = EmbeddingConfig::default();
        let noise = Waveform::new(
            seeded_noise(9, 8000).iter().map(|v| 0.1 * v).collect(),
            16_000,
        )
        .unwrap();
        let tone = Waveform::new(sine(220.0, 16_000, 8000, 0.5), 16_000).unwrap();
        let c = cosine(
            &extract_embedding(&noise, &cfg).unwrap(),
            &extract_embedding(&tone, &cfg).unwrap(),
        );
        assert!(c < 0.9, "cosine {c}");
    }

    #[test]
    fn trailing_silence_is_skipped() {
        let cfg = EmbeddingConfig::default();
        let a = extract_embedding(&voiced(1.0), &cfg).unwrap();
        let mut x = voiced(1.0).into_samples();
        x.extend(std::iter::repeat_n(0.0, 4000));
        let b = extract_embedding(&Waveform::new(x, 16_000).unwrap(), &cfg).unwrap();
        assert!(cosine(&a, &b) > 0.999);
        let silent = Waveform::silence(8000, 16_000).unwrap();
        assert!(extract_embedding(&silent, &cfg).is_err());
    }

    #[test]
    fn too_short_is_rejected() {
        let w = Waveform::silence(3000, 16_000).unwrap();
        assert!(extract_embedding(&w, &EmbeddingConfig::default()).is_err());
    }

    #[test]
    fn filterbank_rows_peak_at_one() {
        let bank = mel_filterbank(26, 512, 16_000.0);
        assert_eq!(bank.len(), 26);
        for row in &bank {
            let peak = row.iter().cloned().fold(0.0, f64::max);
            assert!(peak > 0.5 && peak <= 1.0);
        }
    }
}
