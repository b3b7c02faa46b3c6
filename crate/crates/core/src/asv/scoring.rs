use serde::{Deserialize, Serialize};

use super::{AsvError, Embedding};

pub const DEFAULT_SCORE_SCALE: f64 = 10.0;

/// Produces an LLR-like verification score for an (enrollment, trial) pair.
pub trait Scorer: Sync {
    fn score(&self, enroll: &Embedding, trial: &Embedding) -> Result<f64, AsvError>;
}

/// `scale * cosine(enroll, trial)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineScorer {
    pub scale: f64,
}

impl Default for CosineScorer {
    fn default() -> Self {
        Self {
            scale: DEFAULT_SCORE_SCALE,
        }
    }
}

impl Scorer for CosineScorer {
    fn score(&self, enroll: &Embedding, trial: &Embedding) -> Result<f64, AsvError> {
        if enroll.dim() != trial.dim() {
            return Err(AsvError::InvalidInput(format!(
                "embedding dimensions differ: {} vs {}",
                enroll.dim(),
                trial.dim()
            )));
        }
        let (na, nb) = (enroll.norm(), trial.norm());
        if na <= f64::EPSILON || nb <= f64::EPSILON {
            return Err(AsvError::InvalidInput("zero-norm embedding".into()));
        }
        let dot: f64 = enroll
            .vector()
            .iter()
            .zip(trial.vector())
            .map(|(a, b)| a * b)
            .sum();
        Ok(self.scale * (dot / (na * nb)).clamp(-1.0, 1.0))
    }
}

/// Calibrated cosine score with the default scale.
pub fn score_trial(enroll: &Embedding, trial: &Embedding) -> Result<f64, AsvError> {
    CosineScorer::default().score(enroll, trial)
}

/// Averages enrollment embeddings into one unit-length speaker model.
pub fn enroll_speaker(embeddings: &[Embedding]) -> Result<Embedding, AsvError> {
    let first = embeddings
        .first()
        .ok_or_else(|| AsvError::InvalidInput("no enrollment embeddings".into()))?;
    let dim = first.dim();
    if embeddings.iter().any(|e| e.dim() != dim) {
        return Err(AsvError::InvalidInput(
            "enrollment embeddings differ in dimension".into(),
        ));
    }
    let mut mean = vec![0.0; dim];
    for e in embeddings {
        for (m, v) in mean.iter_mut().zip(e.vector()) {
            *m += v;
        }
    }
    let n = embeddings.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let pooled: usize = embeddings.iter().map(|e| e.source_utts()).sum();
    Embedding::new(mean, pooled)?
        .normalized()
        .map_err(|_| AsvError::InvalidInput("degenerate enrollment: mean embedding is zero".into()))
}

/// Per-dimension standardisation followed by length normalisation.
///
/// Fitting on a training set is the attacker's stand-in for retraining the
/// verification system on its own data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backend {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Backend {
    pub fn fit(training: &[Embedding]) -> Result<Self, AsvError> {
        let first = training
            .first()
            .ok_or_else(|| AsvError::InvalidInput("empty backend training set".into()))?;
        let dim = first.dim();
        if training.iter().any(|e| e.dim() != dim) {
            return Err(AsvError::InvalidInput(
                "training embeddings differ in dimension".into(),
            ));
        }
        let n = training.len() as f64;
        let mut mean = vec![0.0; dim];
        for e in training {
            for (m, v) in mean.iter_mut().zip(e.vector()) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for e in training {
            for ((s, v), m) in var.iter_mut().zip(e.vector()).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let std = var.iter().map(|v| v.sqrt().max(1e-6)).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, e: &Embedding) -> Result<Embedding, AsvError> {
        if e.dim() != self.mean.len() {
            return Err(AsvError::InvalidInput(format!(
                "backend expects dimension {}, got {}",
                self.mean.len(),
                e.dim()
            )));
        }
        let v = e
            .vector()
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect();
        Embedding::new(v, e.source_utts())?.normalized()
    }
}
