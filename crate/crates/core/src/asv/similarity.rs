use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AsvError, Embedding, Scorer};

/// Speaker-by-speaker voice similarity, entries in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    speakers: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(speakers: Vec<String>, values: Vec<f64>) -> Result<Self, AsvError> {
        let n = speakers.len();
        if values.len() != n * n {
            return Err(AsvError::InvalidInput(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(AsvError::InvalidInput(
                "similarities must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { speakers, values })
    }

    pub fn speakers(&self) -> &[String] {
        &self.speakers
    }

    pub fn n(&self) -> usize {
        self.speakers.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// CSV with a header row and a leading column of speaker ids.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("speaker");
        for spk in &self.speakers {
            s.push(',');
            s.push_str(spk);
        }
        s.push('\n');
        for (i, spk) in self.speakers.iter().enumerate() {
            s.push_str(spk);
            for j in 0..self.n() {
                let _ = write!(s, ",{:.6}", self.get(i, j));
            }
            s.push('\n');
        }
        s
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Voice similarity matrix from utterance embeddings grouped by speaker.
///
/// `M(i, j)` is the logistic sigmoid of the mean score over all ordered
/// pairs `(x_k of speaker i, x_l of speaker j)`; on the diagonal the
/// `k == l` self-pairs are skipped and the mean runs over the
/// `n_i * (n_i - 1)` remaining pairs.
pub fn similarity_matrix<S: Scorer + ?Sized>(
    groups: &[(String, Vec<Embedding>)],
    scorer: &S,
) -> Result<SimilarityMatrix, AsvError> {
    if let Some((spk, _)) = groups.iter().find(|(_, e)| e.len() < 2) {
        return Err(AsvError::InvalidInput(format!(
            "speaker {spk} needs at least 2 utterances for the similarity matrix"
        )));
    }
    let n = groups.len();
    let values = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let (a, b) = (&groups[i].1, &groups[j].1);
            let mut sum = 0.0;
            let mut count = 0usize;
            for (k, x) in a.iter().enumerate() {
                for (l, y) in b.iter().enumerate() {
                    if i == j && k == l {
                        continue;
                    }
                    sum += scorer.score(x, y)?;
                    count += 1;
                }
            }
            Ok(sigmoid(sum / count as f64))
        })
        .collect::<Result<Vec<_>, AsvError>>()?;
    SimilarityMatrix::new(groups.iter().map(|(s, _)| s.clone()).collect(), values)
}

/// Absolute difference between the mean diagonal and mean off-diagonal
/// entries.
pub fn diagonal_dominance(m: &SimilarityMatrix) -> Result<f64, AsvError> {
    let n = m.n();
    if n < 2 {
        return Err(AsvError::InvalidInput(format!(
            "diagonal dominance needs at least 2 speakers, got {n}"
        )));
    }
    // centring on one entry makes constant matrices give exactly 0
    let r = m.get(0, 0);
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag += m.get(i, j) - r;
            } else {
                off += m.get(i, j) - r;
            }
        }
    }
    Ok((diag / n as f64 - off / (n * (n - 1)) as f64).abs())
}

/// Gain of voice distinctiveness in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gvd {
    Db(f64),
    /// The anonymized matrix has no diagonal dominance at all.
    NegInfinity,
    /// The original matrix has no diagonal dominance, so the ratio is
    /// undefined.
    Undefined,
}

impl Gvd {
    pub fn as_f64(self) -> Option<f64> {
        match self {
            Gvd::Db(v) => Some(v),
            Gvd::NegInfinity => Some(f64::NEG_INFINITY),
            Gvd::Undefined => None,
        }
    }
}

impl fmt::Display for Gvd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gvd::Db(v) => write!(f, "{v:.6}"),
            Gvd::NegInfinity => f.write_str("-inf"),
            Gvd::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Gvd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Gvd::Db(v) => s.serialize_f64(*v),
            Gvd::NegInfinity => s.serialize_str("-inf"),
            Gvd::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Gvd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Gvd::Db(v)),
            Raw::Text(t) if t == "-inf" => Ok(Gvd::NegInfinity),
            Raw::Text(t) if t == "undefined" => Ok(Gvd::Undefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "invalid G_VD value {t:?}"
            ))),
        }
    }
}

/// `10 * log10(D(M_aa) / D(M_oo))`, computed as a difference of logs so
/// that swapping the arguments negates the result exactly.
pub fn gain_voice_distinctiveness(
    m_oo: &SimilarityMatrix,
    m_aa: &SimilarityMatrix,
) -> Result<Gvd, AsvError> {
    let d_oo = diagonal_dominance(m_oo)?;
    let d_aa = diagonal_dominance(m_aa)?;
    if d_oo == 0.0 {
        return Err(AsvError::UndefinedMetric(
            "original similarity matrix has zero diagonal dominance".into(),
        ));
    }
    if d_aa == 0.0 {
        return Ok(Gvd::NegInfinity);
    }
    Ok(Gvd::Db(10.0 * (d_aa.log10() - d_oo.log10())))
}
