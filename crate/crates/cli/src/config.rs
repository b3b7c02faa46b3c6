use std::fs;
use std::path::Path;

use anonkit_core::asv::{EmbeddingConfig, DEFAULT_SCORE_SCALE};
use anonkit_core::pitch::PitchConfig;
use anonkit_core::{AnonymizationConfig, Level, Method, DEFAULT_SEED};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;

/// TOML run configuration. Every field is optional; command-line flags
/// override it and built-in defaults fill the rest.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub anonymization: AnonymizationSection,
    pub evaluation: EvaluationSection,
    pub embedding: EmbeddingConfig,
    pub pitch: PitchConfig,
}

/// Anonymization overrides. The seed lives at the top level.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnonymizationSection {
    pub method: Option<Method>,
    pub level: Option<Level>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub shift_min: Option<f64>,
    pub shift_max: Option<f64>,
    pub frame_ms: Option<f64>,
    pub hop_ms: Option<f64>,
    pub lpc_order: Option<usize>,
    pub lag_window_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub attacker_seed: Option<u64>,
    pub score_scale: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mcadams,
    PitchShift,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mcadams => Method::McAdams,
            MethodArg::PitchShift => Method::PitchShift,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Speaker,
    Utterance,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Speaker => Level::Speaker,
            LevelArg::Utterance => Level::Utterance,
        }
    }
}

/// Anonymization flags shared by `anonymize` and `evaluate`.
#[derive(Debug, Clone, Default, Args)]
pub struct AnonArgs {
    /// Anonymization method
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Draw one pseudo-speaker per source speaker or per utterance
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    /// Lower bound of the McAdams coefficient range
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Upper bound of the McAdams coefficient range
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Lower bound of the pitch shift range in semitones
    #[arg(long, allow_hyphen_values = true)]
    pub shift_min: Option<f64>,
    /// Upper bound of the pitch shift range in semitones
    #[arg(long, allow_hyphen_values = true)]
    pub shift_max: Option<f64>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub threads: Option<usize>,
    pub anonymization: AnonymizationConfig,
    pub attacker_seed: Option<u64>,
    pub score_scale: f64,
    pub embedding: EmbeddingConfig,
    pub pitch: PitchConfig,
}

impl Settings {
    /// Merges flags over the file over defaults.
    pub fn resolve(
        file: FileConfig,
        seed: Option<u64>,
        threads: Option<usize>,
    ) -> Result<Self, CliError> {
        let seed = seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let threads = threads.or(file.threads);
        if threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        let a = file.anonymization;
        let d = AnonymizationConfig::default();
        let anonymization = AnonymizationConfig {
            method: a.method.unwrap_or(d.method),
            level: a.level.unwrap_or(d.level),
            seed,
            alpha_min: a.alpha_min.unwrap_or(d.alpha_min),
            alpha_max: a.alpha_max.unwrap_or(d.alpha_max),
            shift_min: a.shift_min.unwrap_or(d.shift_min),
            shift_max: a.shift_max.unwrap_or(d.shift_max),
            frame_ms: a.frame_ms.unwrap_or(d.frame_ms),
            hop_ms: a.hop_ms.unwrap_or(d.hop_ms),
            lpc_order: a.lpc_order.unwrap_or(d.lpc_order),
            lag_window_hz: a.lag_window_hz.unwrap_or(d.lag_window_hz),
        };
        let score_scale = file.evaluation.score_scale.unwrap_or(DEFAULT_SCORE_SCALE);
        if !(score_scale.is_finite() && score_scale > 0.0) {
            return Err(CliError::Config(format!(
                "score_scale must be positive, got {score_scale}"
            )));
        }
        Ok(Self {
            seed,
            threads,
            anonymization,
            attacker_seed: file.evaluation.attacker_seed,
            score_scale,
            embedding: file.embedding,
            pitch: file.pitch,
        })
    }

    /// The anonymization config with command-line overrides applied and
    /// validated.
    pub fn anonymization_with(&self, args: &AnonArgs) -> Result<AnonymizationConfig, CliError> {
        let mut cfg = self.anonymization.clone();
        if let Some(m) = args.method {
            cfg.method = m.into();
        }
        if let Some(l) = args.level {
            cfg.level = l.into();
        }
        cfg.alpha_min = args.alpha_min.unwrap_or(cfg.alpha_min);
        cfg.alpha_max = args.alpha_max.unwrap_or(cfg.alpha_max);
        cfg.shift_min = args.shift_min.unwrap_or(cfg.shift_min);
        cfg.shift_max = args.shift_max.unwrap_or(cfg.shift_max);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration echo for reports. Thread count is left out so that
    /// reports do not depend on it.
    pub fn echo(
        &self,
        anonymization: &AnonymizationConfig,
        attacker_seed: u64,
    ) -> serde_json::Value {
        json!({
            "seed": self.seed,
            "anonymization": to_value(anonymization),
            "evaluation": {
                "attacker_seed": attacker_seed,
                "score_scale": self.score_scale,
            },
            "embedding": to_value(&self.embedding),
            "pitch": to_value(&self.pitch),
        })
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config types serialise to JSON")
}
