use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AsvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Target,
    Nontarget,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Target => "target",
            Label::Nontarget => "nontarget",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub enroll_speaker: String,
    pub trial_utterance: String,
    pub label: Label,
}

/// Enrollment-speaker / trial-utterance pairs with same/different labels.
///
/// File format: `<enroll_speaker_id> <trial_utterance_id> target|nontarget`
/// per line, whitespace separated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrialSet {
    trials: Vec<Trial>,
}

fn read_text(path: &Path) -> Result<String, AsvError> {
    fs::read_to_string(path).map_err(|source| AsvError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), AsvError> {
    fs::write(path, text).map_err(|source| AsvError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl TrialSet {
    pub fn new(trials: Vec<Trial>) -> Result<Self, AsvError> {
        let mut seen = HashSet::new();
        for t in &trials {
            if !seen.insert((t.enroll_speaker.as_str(), t.trial_utterance.as_str())) {
                return Err(AsvError::InvalidInput(format!(
                    "duplicate trial ({}, {})",
                    t.enroll_speaker, t.trial_utterance
                )));
            }
        }
        Ok(Self { trials })
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.trials.iter().filter(|t| t.label == label).count()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, AsvError> {
        let mut trials = Vec::new();
        let mut first_seen: HashMap<(String, String), usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| AsvError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [spk, utt, label] = fields[..] else {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            };
            let label = match label {
                "target" => Label::Target,
                "nontarget" => Label::Nontarget,
                other => {
                    return Err(err(format!(
                        "label must be target or nontarget, got {other:?}"
                    )))
                }
            };
            if let Some(first) = first_seen.insert((spk.into(), utt.into()), line_no) {
                return Err(err(format!(
                    "duplicate trial ({spk}, {utt}), first on line {first}"
                )));
            }
            trials.push(Trial {
                enroll_speaker: spk.into(),
                trial_utterance: utt.into(),
                label,
            });
        }
        Ok(Self { trials })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AsvError> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, path)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.trials {
            let _ = writeln!(s, "{} {} {}", t.enroll_speaker, t.trial_utterance, t.label);
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), AsvError> {
        write_text(path.as_ref(), &self.to_text())
    }
}

/// Scores parallel to a [`TrialSet`].
///
/// File format: `<enroll_speaker_id> <trial_utterance_id> <score>` per line.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    scores: Vec<f64>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, trials: &TrialSet) -> Result<Self, AsvError> {
        if scores.len() != trials.len() {
            return Err(AsvError::InvalidInput(format!(
                "{} scores for {} trials",
                scores.len(),
                trials.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(AsvError::InvalidInput(format!("score {i} is not finite")));
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Target and non-target scores.
    pub fn split(&self, trials: &TrialSet) -> (Vec<f64>, Vec<f64>) {
        let mut tar = Vec::new();
        let mut non = Vec::new();
        for (t, &s) in trials.trials().iter().zip(&self.scores) {
            match t.label {
                Label::Target => tar.push(s),
                Label::Nontarget => non.push(s),
            }
        }
        (tar, non)
    }

    /// Parses a scores file and joins it against `trials`; every trial must
    /// have exactly one score. Extra scored pairs are ignored.
    pub fn parse_for(text: &str, path: &Path, trials: &TrialSet) -> Result<Self, AsvError> {
        let mut by_pair: HashMap<(String, String), f64> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| AsvError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [spk, utt, score] = fields[..] else {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            };
            let score: f64 = score
                .parse()
                .map_err(|_| err(format!("score {score:?} is not a number")))?;
            if by_pair.insert((spk.into(), utt.into()), score).is_some() {
                return Err(err(format!("duplicate score for ({spk}, {utt})")));
            }
        }
        let scores = trials
            .trials()
            .iter()
            .map(|t| {
                by_pair
                    .get(&(t.enroll_speaker.clone(), t.trial_utterance.clone()))
                    .copied()
                    .ok_or_else(|| {
                        AsvError::InvalidInput(format!(
                            "{}: no score for trial ({}, {})",
                            path.display(),
                            t.enroll_speaker,
                            t.trial_utterance
                        ))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(scores, trials)
    }

    pub fn load_for(path: impl AsRef<Path>, trials: &TrialSet) -> Result<Self, AsvError> {
        let path = path.as_ref();
        Self::parse_for(&read_text(path)?, path, trials)
    }

    pub fn to_text(&self, trials: &TrialSet) -> String {
        let mut s = String::new();
        for (t, sc) in trials.trials().iter().zip(&self.scores) {
            let _ = writeln!(s, "{} {} {:.6}", t.enroll_speaker, t.trial_utterance, sc);
        }
        s
    }

    pub fn write(&self, trials: &TrialSet, path: impl AsRef<Path>) -> Result<(), AsvError> {
        write_text(path.as_ref(), &self.to_text(trials))
    }
}
