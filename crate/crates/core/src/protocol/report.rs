use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::json::to_canonical_string;
use super::{
    aggregate, evaluate_condition, pitch_gate, ConditionResult, EvaluationCondition, ProtocolError,
};
use crate::asv::Gvd;

/// JSON schema every generated report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Metrics for one dataset. `eer`, `rho_f0` and `g_vd` are required for a
/// report; WER is optional because it needs external ASR hypotheses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub name: String,
    /// Semi-informed attack EER on anonymized data.
    pub eer: Option<f64>,
    pub eer_unprotected: Option<f64>,
    pub wer: Option<f64>,
    /// Utterances with no hypothesis, scored as full deletions.
    #[serde(default)]
    pub wer_missing_hypotheses: usize,
    pub rho_f0: Option<f64>,
    pub rho_f0_dtw: Option<f64>,
    #[serde(default)]
    pub rho_f0_undefined: usize,
    pub g_vd: Option<Gvd>,
    /// Per-utterance CSV files keyed by content (`pitch`, `scores`, ...).
    #[serde(default)]
    pub sidecars: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportInputs {
    pub datasets: Vec<DatasetMetrics>,
    pub conditions: Vec<EvaluationCondition>,
    /// Echo of the run configuration.
    pub config: serde_json::Value,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub tool_version: String,
    pub config: serde_json::Value,
    pub datasets: Vec<DatasetMetrics>,
    pub weighted_eer: f64,
    pub weighted_eer_unprotected: Option<f64>,
    pub weighted_wer: Option<f64>,
    pub pitch_gate_passed: bool,
    pub conditions: Vec<ConditionResult>,
}

impl EvaluationReport {
    /// Sorted keys, six-decimal floats, trailing newline.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is always serialisable");
        to_canonical_string(&value)
    }

    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text)
            .map_err(|e| ProtocolError::Invalid(format!("bad report JSON: {e}")))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ProtocolError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| ProtocolError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Indices of the conditions that passed.
    pub fn passed_conditions(&self) -> Vec<u8> {
        self.conditions
            .iter()
            .filter(|c| c.passed)
            .map(|c| c.index)
            .collect()
    }
}

fn all_present(values: &[Option<f64>]) -> Option<Vec<f64>> {
    values.iter().copied().collect()
}

/// Aggregates per-dataset metrics and evaluates every condition.
///
/// Fails with the full list of gaps when any dataset lacks a required
/// metric.
pub fn generate_report(inputs: &ReportInputs) -> Result<EvaluationReport, ProtocolError> {
    if inputs.datasets.is_empty() {
        return Err(ProtocolError::Invalid(
            "report needs at least one dataset".into(),
        ));
    }
    let mut gaps = Vec::new();
    for d in &inputs.datasets {
        if d.eer.is_none() {
            gaps.push(format!("{}.eer", d.name));
        }
        if d.rho_f0.is_none() {
            gaps.push(format!("{}.rho_f0", d.name));
        }
        if d.g_vd.is_none() {
            gaps.push(format!("{}.g_vd", d.name));
        }
    }
    if !gaps.is_empty() {
        return Err(ProtocolError::MissingMetrics(gaps));
    }

    let eers: Vec<f64> = inputs.datasets.iter().map(|d| d.eer.unwrap()).collect();
    let rhos: Vec<f64> = inputs.datasets.iter().map(|d| d.rho_f0.unwrap()).collect();
    let wers = all_present(&inputs.datasets.iter().map(|d| d.wer).collect::<Vec<_>>());
    let (weighted_eer, weighted_wer) = match &wers {
        Some(w) => {
            let (e, w) = aggregate(&eers, w)?;
            (e, Some(w))
        }
        None => (aggregate(&eers, &eers)?.0, None),
    };
    let weighted_eer_unprotected = all_present(
        &inputs
            .datasets
            .iter()
            .map(|d| d.eer_unprotected)
            .collect::<Vec<_>>(),
    )
    .map(|v| v.iter().sum::<f64>() / v.len() as f64);
    let gate = pitch_gate(&rhos);
    let conditions = inputs
        .conditions
        .iter()
        .map(|c| evaluate_condition(weighted_eer, weighted_wer, gate, c))
        .collect();
    Ok(EvaluationReport {
        tool_version: inputs.tool_version.clone(),
        config: inputs.config.clone(),
        datasets: inputs.datasets.clone(),
        weighted_eer,
        weighted_eer_unprotected,
        weighted_wer,
        pitch_gate_passed: gate,
        conditions,
    })
}
