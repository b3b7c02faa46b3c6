use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::DspError;
use crate::audio::{Waveform, Window};

pub const TSM_FFT_LEN: usize = 1024;
pub const TSM_ANALYSIS_HOP: usize = 256;
pub const MIN_STRETCH: f64 = 0.25;
pub const MAX_STRETCH: f64 = 4.0;

fn wrap_phase(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

/// Phase-vocoder time-scale modification.
///
/// Scales duration by `stretch` while keeping pitch: STFT with a 1024-point
/// Hann window and hop 256, per-bin phase advance from the instantaneous
/// frequency, resynthesis at hop `round(256 * stretch)`. The output has
/// exactly `round(len * stretch)` samples.
pub fn pv_tsm(w: &Waveform, stretch: f64) -> Result<Waveform, DspError> {
    if !(MIN_STRETCH..=MAX_STRETCH).contains(&stretch) {
        return Err(DspError::InvalidParameter(format!(
            "stretch {stretch} outside [{MIN_STRETCH}, {MAX_STRETCH}]"
        )));
    }
    let n = TSM_FFT_LEN;
    let ha = TSM_ANALYSIS_HOP;
    let hs = (ha as f64 * stretch).round() as usize;
    let x = w.samples();
    let target_len = (x.len() as f64 * stretch).round() as usize;

    // Centre frame m on input sample m*ha.
    let pad = n / 2;
    let mut padded = vec![0.0; pad];
    padded.extend_from_slice(x);
    padded.resize(padded.len() + n, 0.0);
    let n_frames = x.len().div_ceil(ha) + 1;

    let window = Window::Hann.coefficients(n);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let half = n / 2;
    let bin_freq: Vec<f64> = (0..=half).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let mut prev_phase = vec![0.0; half + 1];
    let mut synth_phase = vec![0.0; half + 1];

    let out_len = (n_frames - 1) * hs + n;
    let mut acc = vec![0.0; out_len];
    let mut env = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    for m in 0..n_frames {
        let start = m * ha;
        for i in 0..n {
            buf[i] = Complex64::new(padded[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);

        for k in 0..=half {
            let (mag, phase) = buf[k].to_polar();
            if m == 0 {
                synth_phase[k] = phase;
            } else {
                let deviation = wrap_phase(phase - prev_phase[k] - bin_freq[k] * ha as f64);
                let inst_freq = bin_freq[k] + deviation / ha as f64;
                synth_phase[k] += inst_freq * hs as f64;
            }
            prev_phase[k] = phase;
            buf[k] = Complex64::from_polar(mag, synth_phase[k]);
        }
        // keep the spectrum Hermitian so the inverse is real
        buf[0].im = 0.0;
        buf[half].im = 0.0;
        for k in 1..half {
            buf[n - k] = buf[k].conj();
        }
        ifft.process(&mut buf);

        let out_start = m * hs;
        for i in 0..n {
            let wi = window[i];
            acc[out_start + i] += wi * buf[i].re / n as f64;
            env[out_start + i] += wi * wi;
        }
    }

    let mut out: Vec<f64> = acc
        .iter()
        .zip(&env)
        .skip(pad)
        .map(|(a, e)| if *e > 1e-8 { a / e } else { 0.0 })
        .take(target_len)
        .collect();
    out.resize(target_len, 0.0);
    Ok(Waveform::new(out, w.sample_rate())?)
}
