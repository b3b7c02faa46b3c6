//! Mono PCM audio: the `Waveform` type, 16-bit WAV I/O, framing and
//! band-limited resampling.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Sample rate assumed when nothing else is known.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

const PCM_SCALE: f64 = 32768.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed WAV file: {0}")]
    Format(String),
    #[error("unsupported WAV format: {0}")]
    Unsupported(String),
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Mono sampled audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidWaveform(
                "sample rate must be positive".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidWaveform(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Converts a duration in milliseconds to a sample count at this rate.
    pub fn ms_to_samples(&self, ms: f64) -> usize {
        ms_to_samples(ms, self.sample_rate)
    }
}

pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> AudioError + '_ {
    move |source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a RIFF/WAVE file holding 16-bit mono PCM.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_wav(&bytes)
}

/// Parses an in-memory WAV image. See [`read_wav`].
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::Format("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| AudioError::Format("chunk extends past end of file".into()))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(AudioError::Format("fmt chunk too short".into()));
                }
                let le16 = |o: usize| u16::from_le_bytes([body[o], body[o + 1]]);
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                fmt = Some((le16(0), le16(2), rate, le16(14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let (format_tag, channels, sample_rate, bits) =
        fmt.ok_or_else(|| AudioError::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::Format("missing data chunk".into()))?;
    if format_tag != 1 {
        return Err(AudioError::Unsupported(format!(
            "format tag {format_tag} (only PCM = 1)"
        )));
    }
    if channels != 1 {
        return Err(AudioError::Unsupported(format!(
            "{channels} channels (mono only)"
        )));
    }
    if bits != 16 {
        return Err(AudioError::Unsupported(format!(
            "{bits} bits per sample (16 only)"
        )));
    }
    if sample_rate == 0 {
        return Err(AudioError::Format("zero sample rate".into()));
    }
    if data.len() % 2 != 0 {
        return Err(AudioError::Format("odd-sized 16-bit data chunk".into()));
    }

    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / PCM_SCALE)
        .collect();
    Waveform::new(samples, sample_rate)
}

/// Quantizes a sample to 16-bit PCM, clipping out-of-range amplitudes.
pub fn quantize_sample(x: f64) -> i16 {
    (x * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

/// Serializes a waveform as a canonical 44-byte-header WAV image.
pub fn encode_wav(w: &Waveform) -> Vec<u8> {
    let data_len = (w.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &w.samples {
        out.extend_from_slice(&quantize_sample(s).to_le_bytes());
    }
    out
}

/// Writes 16-bit mono PCM. Amplitudes outside [-1, 1] are clipped.
pub fn write_wav(w: &Waveform, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    fs::write(path, encode_wav(w)).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    /// Periodic Hann, so that half-overlapped frames sum to a constant.
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    frame_len: usize,
    hop: usize,
    window: Window,
}

impl FrameConfig {
    pub fn new(frame_len: usize, hop: usize, window: Window) -> Result<Self, AudioError> {
        if hop == 0 || hop > frame_len {
            return Err(AudioError::InvalidParameter(format!(
                "need 0 < hop <= frame_len, got hop {hop}, frame_len {frame_len}"
            )));
        }
        Ok(Self {
            frame_len,
            hop,
            window,
        })
    }

    pub fn from_ms(
        sample_rate: u32,
        frame_ms: f64,
        hop_ms: f64,
        window: Window,
    ) -> Result<Self, AudioError> {
        Self::new(
            ms_to_samples(frame_ms, sample_rate),
            ms_to_samples(hop_ms, sample_rate),
            window,
        )
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Number of frames `frame_signal` produces for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.frame_len {
            1
        } else {
            (len - self.frame_len).div_ceil(self.hop) + 1
        }
    }
}

/// Splits a signal into windowed frames. Frame `k` covers samples
/// `[k*hop, k*hop + frame_len)`, zero-padded past the end of the input.
pub fn frame_signal(signal: &[f64], cfg: &FrameConfig) -> Vec<Vec<f64>> {
    let window = cfg.window.coefficients(cfg.frame_len);
    (0..cfg.frame_count(signal.len()))
        .map(|k| {
            let start = k * cfg.hop;
            window
                .iter()
                .enumerate()
                .map(|(i, w)| signal.get(start + i).copied().unwrap_or(0.0) * w)
                .collect()
        })
        .collect()
}

pub const MIN_RESAMPLE_RATIO: f64 = 0.25;
pub const MAX_RESAMPLE_RATIO: f64 = 4.0;

const SINC_HALF_TAPS: usize = 32;
const KAISER_BETA: f64 = 8.0;
const KERNEL_OVERSAMPLING: usize = 512;

/// Modified Bessel function of the first kind, order zero.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= half / k as f64;
        let t2 = term * term;
        sum += t2;
        if t2 < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Tabulated Kaiser-windowed sinc lowpass with cutoff `cutoff` (fraction of
/// the input Nyquist rate).
struct SincKernel {
    half_width: usize,
    table: Vec<f64>,
}

impl SincKernel {
    fn new(cutoff: f64) -> Self {
        let half_width = (SINC_HALF_TAPS as f64 / cutoff).ceil() as usize;
        let i0_beta = bessel_i0(KAISER_BETA);
        let n = half_width * KERNEL_OVERSAMPLING;
        let table = (0..=n)
            .map(|i| {
                let d = i as f64 / KERNEL_OVERSAMPLING as f64;
                let u = d / half_width as f64;
                let kaiser = bessel_i0(KAISER_BETA * (1.0 - u * u).max(0.0).sqrt()) / i0_beta;
                cutoff * sinc(cutoff * d) * kaiser
            })
            .collect();
        Self { half_width, table }
    }

    fn eval(&self, d: f64) -> f64 {
        let pos = d.abs() * KERNEL_OVERSAMPLING as f64;
        let i = pos.floor() as usize;
        if i + 1 >= self.table.len() {
            return 0.0;
        }
        let frac = pos - i as f64;
        if frac == 0.0 {
            self.table[i]
        } else {
            self.table[i] * (1.0 - frac) + self.table[i + 1] * frac
        }
    }
}

/// Changes the number of samples by `ratio` with windowed-sinc interpolation.
///
/// The sample rate is left unchanged, so the result played back at the same
/// rate is shifted in pitch by `1 / ratio`. Downsampling (ratio < 1) lowers
/// the interpolation cutoff to avoid aliasing.
pub fn resample(w: &Waveform, ratio: f64) -> Result<Waveform, AudioError> {
    if !(MIN_RESAMPLE_RATIO..=MAX_RESAMPLE_RATIO).contains(&ratio) {
        return Err(AudioError::InvalidParameter(format!(
            "resampling ratio {ratio} outside [{MIN_RESAMPLE_RATIO}, {MAX_RESAMPLE_RATIO}]"
        )));
    }
    let input = w.samples();
    let out_len = (input.len() as f64 * ratio).round() as usize;
    let kernel = SincKernel::new(ratio.min(1.0));
    let hw = kernel.half_width as isize;
    let n_in = input.len() as isize;

    let out = (0..out_len)
        .map(|m| {
            let t = m as f64 / ratio;
            let centre = t.floor() as isize;
            let lo = (centre - hw + 1).max(0);
            let hi = (centre + hw).min(n_in - 1);
            (lo..=hi)
                .map(|k| input[k as usize] * kernel.eval(t - k as f64))
                .sum()
        })
        .collect();
    Waveform::new(out, w.sample_rate())
}
