use serde::{Deserialize, Serialize};

use super::{AsvError, ScoreSet, TrialSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    pub n_target: usize,
    pub n_nontarget: usize,
}

/// Equal error rate from raw target and non-target scores.
///
/// At threshold `t`, `P_fa` is the share of non-target scores `>= t` and
/// `P_miss` the share of target scores `< t`. Thresholds are swept over all
/// distinct scores and `+inf`; the EER is interpolated linearly between the
/// two ROC vertices where `P_fa - P_miss` changes sign.
pub fn eer_from_scores(targets: &[f64], nontargets: &[f64]) -> Result<EerResult, AsvError> {
    if targets.is_empty() || nontargets.is_empty() {
        return Err(AsvError::InvalidInput(format!(
            "EER needs both trial classes, got {} target and {} non-target scores",
            targets.len(),
            nontargets.len()
        )));
    }
    if targets.iter().chain(nontargets).any(|s| !s.is_finite()) {
        return Err(AsvError::InvalidInput("scores must be finite".into()));
    }
    let mut all: Vec<(f64, bool)> = targets
        .iter()
        .map(|&s| (s, true))
        .chain(nontargets.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nt, nn) = (targets.len() as f64, nontargets.len() as f64);

    // (threshold, p_fa, p_miss) for each distinct score, then +inf
    let mut vertices = Vec::new();
    let mut tar_below = 0usize;
    let mut non_below = 0usize;
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        vertices.push((
            s,
            (nontargets.len() - non_below) as f64 / nn,
            tar_below as f64 / nt,
        ));
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tar_below += 1;
            } else {
                non_below += 1;
            }
            i += 1;
        }
    }
    vertices.push((f64::INFINITY, 0.0, 1.0));

    let k = vertices
        .iter()
        .position(|&(_, fa, miss)| fa - miss <= 0.0)
        .expect("the +inf vertex has p_fa - p_miss = -1");
    let (t1, fa1, m1) = vertices[k];
    if k == 0 || fa1 == m1 {
        return Ok(EerResult {
            eer: m1,
            threshold: t1,
            n_target: targets.len(),
            n_nontarget: nontargets.len(),
        });
    }
    let (t0, fa0, m0) = vertices[k - 1];
    let (d0, d1) = (fa0 - m0, fa1 - m1);
    let frac = d0 / (d0 - d1);
    let threshold = if t1.is_finite() {
        t0 + frac * (t1 - t0)
    } else {
        t0
    };
    Ok(EerResult {
        eer: m0 + frac * (m1 - m0),
        threshold,
        n_target: targets.len(),
        n_nontarget: nontargets.len(),
    })
}

/// EER of a scored trial list.
pub fn compute_eer(scores: &ScoreSet, trials: &TrialSet) -> Result<EerResult, AsvError> {
    if scores.len() != trials.len() {
        return Err(AsvError::InvalidInput(format!(
            "{} scores for {} trials",
            scores.len(),
            trials.len()
        )));
    }
    let (tar, non) = scores.split(trials);
    eer_from_scores(&tar, &non)
}
