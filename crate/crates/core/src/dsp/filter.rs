use super::roots::{poly_from_roots, polynomial_roots};
use super::{DspError, LpcModel};
use crate::audio::{Waveform, Window};

/// Pole radius that unstable models are pulled back to before synthesis.
const STABLE_RADIUS: f64 = 0.995;
const ENVELOPE_FLOOR: f64 = 1e-8;

/// FIR prediction-error filter `e[n] = x[n] + sum_k a_k x[n-k]`, starting
/// from zero state.
pub fn inverse_filter(frame: &[f64], model: &LpcModel) -> Vec<f64> {
    let a = model.coeffs();
    (0..frame.len())
        .map(|n| {
            let past: f64 = a
                .iter()
                .enumerate()
                .take(n)
                .map(|(k, ak)| ak * frame[n - 1 - k])
                .sum();
            frame[n] + past
        })
        .collect()
}

/// Step-down recursion: true when every reflection coefficient has
/// magnitude below one, i.e. all roots of `A(z)` lie inside the unit circle.
pub fn is_stable(model: &LpcModel) -> bool {
    let mut a = model.coeffs().to_vec();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] - k * a[m - 2 - i]) / denom)
            .collect();
        a = next;
    }
    true
}

/// Returns a stable version of `model`: unchanged when already stable,
/// otherwise with pole radii clamped to 0.995.
pub fn stabilize(model: &LpcModel) -> LpcModel {
    if is_stable(model) {
        return model.clone();
    }
    let clamped = polynomial_roots(model)
        .and_then(|poles| poly_from_roots(&poles.clamp_radius(STABLE_RADIUS)))
        .ok()
        .filter(is_stable);
    if let Some(m) = clamped {
        return m;
    }
    // root finding failed: shrink all poles by bandwidth expansion instead
    let mut gamma = STABLE_RADIUS;
    loop {
        let coeffs = model
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, a)| a * gamma.powi(k as i32 + 1))
            .collect();
        let candidate = LpcModel::new(coeffs, model.gain()).expect("scaled finite coefficients");
        if is_stable(&candidate) {
            return candidate;
        }
        gamma *= STABLE_RADIUS;
    }
}

/// All-pole filter `y[n] = e[n] - sum_k a_k y[n-k]`, starting from zero
/// state. Unstable models are stabilized first.
pub fn synthesis_filter(residual: &[f64], model: &LpcModel) -> Vec<f64> {
    let model = stabilize(model);
    let a = model.coeffs();
    let mut y = vec![0.0; residual.len()];
    for n in 0..residual.len() {
        let past: f64 = a
            .iter()
            .enumerate()
            .take(n)
            .map(|(k, ak)| ak * y[n - 1 - k])
            .sum();
        y[n] = residual[n] - past;
    }
    y
}

/// Weighted overlap-add of analysis frames.
///
/// Each frame is multiplied by `window` again and the sum is divided by the
/// summed squared window, so frames taken with the same window reconstruct
/// the signal wherever the envelope is non-zero.
pub fn overlap_add(
    frames: &[Vec<f64>],
    hop: usize,
    window: Window,
    sample_rate: u32,
) -> Result<Waveform, DspError> {
    let Some(first) = frames.first() else {
        return Ok(Waveform::new(Vec::new(), sample_rate)?);
    };
    let frame_len = first.len();
    if hop == 0 || hop > frame_len {
        return Err(DspError::InvalidParameter(format!(
            "need 0 < hop <= frame_len, got hop {hop}, frame_len {frame_len}"
        )));
    }
    if let Some(i) = frames.iter().position(|f| f.len() != frame_len) {
        return Err(DspError::InvalidParameter(format!(
            "frame {i} has {} samples, expected {frame_len}",
            frames[i].len()
        )));
    }
    let w = window.coefficients(frame_len);
    let out_len = (frames.len() - 1) * hop + frame_len;
    let mut acc = vec![0.0; out_len];
    let mut env = vec![0.0; out_len];
    for (k, frame) in frames.iter().enumerate() {
        let start = k * hop;
        for i in 0..frame_len {
            acc[start + i] += w[i] * frame[i];
            env[start + i] += w[i] * w[i];
        }
    }
    let out = acc
        .iter()
        .zip(&env)
        .map(|(a, e)| a / e.max(ENVELOPE_FLOOR))
        .collect();
    Ok(Waveform::new(out, sample_rate)?)
}
