use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Minimum target EERs of the four evaluation conditions.
pub const STANDARD_MIN_TARGET_EERS: [f64; 4] = [0.15, 0.20, 0.25, 0.30];

/// Every dataset's mean pitch correlation must exceed this.
pub const PITCH_CORRELATION_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationCondition {
    pub index: u8,
    pub min_target_eer: f64,
}

impl EvaluationCondition {
    pub fn new(index: u8) -> Result<Self, ProtocolError> {
        let min_target_eer = *STANDARD_MIN_TARGET_EERS
            .get((index as usize).wrapping_sub(1))
            .ok_or_else(|| {
                ProtocolError::Invalid(format!("condition index {index} not in 1..=4"))
            })?;
        Ok(Self {
            index,
            min_target_eer,
        })
    }

    pub fn standard() -> Vec<Self> {
        (1..=4).map(|i| Self::new(i).unwrap()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub index: u8,
    pub min_target_eer: f64,
    pub passed: bool,
    /// Lower is better; `None` when no WER was measured.
    pub ranking_wer: Option<f64>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Equal-weight averages of per-dataset EERs and WERs.
pub fn aggregate(eers: &[f64], wers: &[f64]) -> Result<(f64, f64), ProtocolError> {
    if eers.is_empty() || wers.is_empty() {
        return Err(ProtocolError::Invalid(
            "aggregation needs at least one dataset".into(),
        ));
    }
    Ok((mean(eers), mean(wers)))
}

/// True when every dataset's mean pitch correlation exceeds the threshold.
pub fn pitch_gate(mean_rhos: &[f64]) -> bool {
    !mean_rhos.is_empty() && mean_rhos.iter().all(|&r| r > PITCH_CORRELATION_THRESHOLD)
}

/// A submission qualifies for a condition when its weighted EER is strictly
/// greater than the condition's minimum and the pitch gate holds.
pub fn evaluate_condition(
    weighted_eer: f64,
    weighted_wer: Option<f64>,
    pitch_gate_passed: bool,
    condition: &EvaluationCondition,
) -> ConditionResult {
    ConditionResult {
        index: condition.index,
        min_target_eer: condition.min_target_eer,
        passed: weighted_eer > condition.min_target_eer && pitch_gate_passed,
        ranking_wer: weighted_wer,
    }
}
