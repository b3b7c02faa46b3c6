use rayon::prelude::*;

use super::{AnonError, AnonymizationConfig};
use crate::audio::{frame_signal, FrameConfig, Waveform, Window};
use crate::dsp::{
    inverse_filter, lpc_coefficients_lagged, overlap_add, poly_from_roots, polynomial_roots,
    rotate_poles, synthesis_filter, DspError,
};

fn process_frame(
    frame: &[f64],
    alpha: f64,
    cfg: &AnonymizationConfig,
    sample_rate: u32,
) -> Result<Vec<f64>, DspError> {
    let model = lpc_coefficients_lagged(frame, cfg.lpc_order, cfg.lag_window_hz, sample_rate)?;
    if model.is_passthrough() {
        return Ok(frame.to_vec());
    }
    let poles = polynomial_roots(&model)?;
    let rotated = poly_from_roots(&rotate_poles(&poles, alpha))?;
    let residual = inverse_filter(frame, &model);
    Ok(synthesis_filter(&residual, &rotated))
}

/// McAdams-coefficient anonymization.
///
/// Each Hann-windowed frame is LPC-analysed (lag-windowed when
/// `cfg.lag_window_hz > 0`), its pole angles are raised to
/// the power `alpha`, and the frame's own residual is filtered through the
/// modified all-pole model. Frames are recombined by weighted overlap-add
/// and the output has exactly the input's length.
pub fn mcadams_anonymize(
    w: &Waveform,
    alpha: f64,
    cfg: &AnonymizationConfig,
) -> Result<Waveform, AnonError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(AnonError::InvalidConfig(format!(
            "McAdams coefficient must lie in (0, 2), got {alpha}"
        )));
    }
    if w.is_empty() {
        return Ok(w.clone());
    }
    let frame_len = w.ms_to_samples(cfg.frame_ms).max(cfg.lpc_order + 1);
    let hop = w.ms_to_samples(cfg.hop_ms).clamp(1, frame_len);
    let fc = FrameConfig::new(frame_len, hop, Window::Hann)?;
    // pad so every input sample lies under at least two frames; at the bare
    // edges the window envelope is near zero and would amplify filter tails
    let pad = frame_len - hop;
    let mut padded = vec![0.0; pad];
    padded.extend_from_slice(w.samples());
    padded.resize(padded.len() + pad, 0.0);
    let frames = frame_signal(&padded, &fc);
    let processed = frames
        .par_iter()
        .enumerate()
        .map(|(index, frame)| {
            process_frame(frame, alpha, cfg, w.sample_rate())
                .map_err(|source| AnonError::Frame { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = overlap_add(&processed, hop, Window::Hann, w.sample_rate())?;
    let samples = out.into_samples()[pad..pad + w.len()].to_vec();
    Ok(Waveform::new(samples, w.sample_rate())?)
}
