use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::stretch_contour;
use super::{dtw_pitch_correlation, estimate_f0, pitch_correlation, PitchConfig, PitchError};
use crate::audio::{read_wav, Waveform};
use crate::protocol::{Manifest, ProtocolError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtterancePitch {
    pub utterance_id: String,
    pub rho: Option<f64>,
    pub rho_dtw: Option<f64>,
    /// Frames voiced in both contours after length matching.
    pub n_voiced: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPitch {
    /// Mean over utterances with a defined correlation.
    pub mean_rho: Option<f64>,
    pub mean_rho_dtw: Option<f64>,
    pub n_undefined: usize,
    pub utterances: Vec<UtterancePitch>,
}

impl CorpusPitch {
    /// CSV with header `utterance_id,rho,rho_dtw,n_voiced`; undefined values
    /// are left empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("utterance_id,rho,rho_dtw,n_voiced\n");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for u in &self.utterances {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                u.utterance_id,
                fmt(u.rho),
                fmt(u.rho_dtw),
                u.n_voiced
            );
        }
        s
    }
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Pitch metrics for one original/anonymized pair of waveforms.
pub fn utterance_pitch(
    utterance_id: &str,
    orig: &Waveform,
    anon: &Waveform,
    with_dtw: bool,
    cfg: &PitchConfig,
) -> Result<UtterancePitch, PitchError> {
    let co = estimate_f0(orig, cfg)?;
    let ca = estimate_f0(anon, cfg)?;
    let n = co.len().max(ca.len());
    let n_voiced = stretch_contour(&co, n)
        .iter()
        .zip(stretch_contour(&ca, n))
        .filter(|(a, b)| **a > 0.0 && *b > 0.0)
        .count();
    let rho = pitch_correlation(&co, &ca);
    let rho_dtw = if with_dtw && co.voiced_count() >= 2 && ca.voiced_count() >= 2 {
        dtw_pitch_correlation(&co, &ca)?
    } else {
        None
    };
    Ok(UtterancePitch {
        utterance_id: utterance_id.to_string(),
        rho,
        rho_dtw,
        n_voiced,
    })
}

/// Pitch correlation between paired utterances of two manifests.
///
/// Both manifests must contain exactly the same utterance ids. Results are
/// listed in the original manifest's order.
pub fn corpus_pitch_correlation(
    orig: &Manifest,
    anon: &Manifest,
    with_dtw: bool,
    cfg: &PitchConfig,
) -> Result<CorpusPitch, PitchError> {
    let a: BTreeSet<&str> = orig
        .entries()
        .iter()
        .map(|e| e.utterance_id.as_str())
        .collect();
    let b: BTreeSet<&str> = anon
        .entries()
        .iter()
        .map(|e| e.utterance_id.as_str())
        .collect();
    if a.is_disjoint(&b) {
        return Err(ProtocolError::Unpaired(
            "original and anonymized manifests share no utterances".into(),
        )
        .into());
    }
    let unpaired: Vec<&str> = a.symmetric_difference(&b).copied().collect();
    if !unpaired.is_empty() {
        return Err(ProtocolError::Unpaired(format!(
            "utterances present in only one manifest: {}",
            unpaired.join(", ")
        ))
        .into());
    }
    let utterances = orig
        .entries()
        .par_iter()
        .map(|e| {
            let o = read_wav(orig.resolve(e))?;
            let an = anon.get(&e.utterance_id).expect("paired above");
            let x = read_wav(anon.resolve(an))?;
            utterance_pitch(&e.utterance_id, &o, &x, with_dtw, cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CorpusPitch {
        mean_rho: mean_defined(utterances.iter().map(|u| u.rho)),
        mean_rho_dtw: mean_defined(utterances.iter().map(|u| u.rho_dtw)),
        n_undefined: utterances.iter().filter(|u| u.rho.is_none()).count(),
        utterances,
    })
}
