//! Word error rate between reference and hypothesis transcripts.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::Manifest;

#[derive(Debug, Error)]
pub enum AsrError {
    #[error("reference transcript is empty")]
    EmptyReference,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid transcripts: {0}")]
    Invalid(String),
}

/// Upper-cases, removes punctuation (apostrophes survive between two
/// alphanumerics) and splits on whitespace.
pub fn normalize_text(s: &str) -> Vec<String> {
    s.split_whitespace()
        .filter_map(|word| {
            let chars: Vec<char> = word.chars().collect();
            let kept: String = chars
                .iter()
                .enumerate()
                .filter(|&(i, &c)| {
                    c.is_alphanumeric()
                        || (c == '\''
                            && i > 0
                            && i + 1 < chars.len()
                            && chars[i - 1].is_alphanumeric()
                            && chars[i + 1].is_alphanumeric())
                })
                .flat_map(|(_, c)| c.to_uppercase())
                .collect();
            (!kept.is_empty()).then_some(kept)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WerBreakdown {
    pub n_sub: usize,
    pub n_del: usize,
    pub n_ins: usize,
    pub n_ref: usize,
    pub wer: f64,
}

impl WerBreakdown {
    pub fn errors(&self) -> usize {
        self.n_sub + self.n_del + self.n_ins
    }

    fn from_counts(n_sub: usize, n_del: usize, n_ins: usize, n_ref: usize) -> Self {
        let wer = if n_ref > 0 {
            (n_sub + n_del + n_ins) as f64 / n_ref as f64
        } else {
            0.0
        };
        Self {
            n_sub,
            n_del,
            n_ins,
            n_ref,
            wer,
        }
    }
}

/// Edit counts `(sub, del, ins)` from one optimal alignment. Ties in the
/// backtrace prefer substitution/match, then deletion, then insertion.
fn align<T: PartialEq>(r: &[T], h: &[T]) -> (usize, usize, usize) {
    let (n, m) = (r.len(), h.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i;
    }
    for (j, v) in d.iter_mut().take(w).enumerate() {
        *v = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(r[i - 1] != h[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = sub.min(del).min(ins);
        }
    }
    let (mut i, mut j) = (n, m);
    let (mut s, mut de, mut ins) = (0, 0, 0);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let diff = usize::from(r[i - 1] != h[j - 1]);
            if here == d[(i - 1) * w + j - 1] + diff {
                s += diff;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * w + j] + 1 {
            de += 1;
            i -= 1;
        } else {
            ins += 1;
            j -= 1;
        }
    }
    (s, de, ins)
}

/// Minimum-edit-distance WER of `hyp` against `reference`.
pub fn wer<T: PartialEq>(reference: &[T], hyp: &[T]) -> Result<WerBreakdown, AsrError> {
    if reference.is_empty() {
        return Err(AsrError::EmptyReference);
    }
    let (s, d, i) = align(reference, hyp);
    Ok(WerBreakdown::from_counts(s, d, i, reference.len()))
}

/// Utterance id to raw transcript text, in file order.
///
/// File format: `utterance_id<TAB>text` per line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcripts {
    entries: Vec<(String, String)>,
}

impl Transcripts {
    pub fn new(entries: Vec<(String, String)>) -> Result<Self, AsrError> {
        let mut seen = HashSet::new();
        for (id, _) in &entries {
            if id.is_empty() || !seen.insert(id.as_str()) {
                return Err(AsrError::Invalid(format!(
                    "empty or duplicate utterance id {id:?}"
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Transcripts carried in a manifest's optional fourth column.
    pub fn from_manifest(m: &Manifest) -> Self {
        Self {
            entries: m
                .entries()
                .iter()
                .filter_map(|e| e.transcript.clone().map(|t| (e.utterance_id.clone(), t)))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, AsrError> {
        let mut entries = Vec::new();
        let mut first: HashMap<String, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| AsrError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (id, body) = line.split_once('\t').unwrap_or((line, ""));
            let id = id.trim();
            if id.is_empty() {
                return Err(err("empty utterance id".into()));
            }
            if let Some(prev) = first.insert(id.to_string(), i + 1) {
                return Err(err(format!(
                    "duplicate utterance id {id}, first on line {prev}"
                )));
            }
            entries.push((id.to_string(), body.to_string()));
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AsrError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| AsrError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (id, t) in &self.entries {
            let _ = writeln!(s, "{id}\t{t}");
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), AsrError> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|source| AsrError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusWer {
    /// Error counts pooled over all utterances.
    pub total: WerBreakdown,
    pub per_utterance: Vec<(String, WerBreakdown)>,
    /// Utterances without a hypothesis, scored as full deletions.
    pub missing: Vec<String>,
}

/// Pooled WER of a dataset: total errors over total reference words.
pub fn corpus_wer(refs: &Transcripts, hyps: &Transcripts) -> Result<CorpusWer, AsrError> {
    let hyp_map: HashMap<&str, &str> = hyps
        .entries()
        .iter()
        .map(|(id, t)| (id.as_str(), t.as_str()))
        .collect();
    let mut per_utterance = Vec::with_capacity(refs.len());
    let mut missing = Vec::new();
    let (mut s, mut d, mut i, mut n) = (0, 0, 0, 0);
    for (id, text) in refs.entries() {
        let r = normalize_text(text);
        let (us, ud, ui) = match hyp_map.get(id.as_str()) {
            Some(h) => align(&r, &normalize_text(h)),
            None => {
                missing.push(id.clone());
                (0, r.len(), 0)
            }
        };
        s += us;
        d += ud;
        i += ui;
        n += r.len();
        per_utterance.push((id.clone(), WerBreakdown::from_counts(us, ud, ui, r.len())));
    }
    if n == 0 {
        return Err(AsrError::EmptyReference);
    }
    if !missing.is_empty() {
        log::warn!("{} utterance(s) have no hypothesis", missing.len());
    }
    Ok(CorpusWer {
        total: WerBreakdown::from_counts(s, d, i, n),
        per_utterance,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        normalize_text(s)
    }

    fn ts(pairs: &[(&str, &str)]) -> Transcripts {
        Transcripts::new(
            pairs
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(toks("Go! Do you hear?"), ["GO", "DO", "YOU", "HEAR"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("don't stop"), ["DON'T", "STOP"]);
        assert_eq!(toks("'quoted' -- word."), ["QUOTED", "WORD"]);
    }

    #[test]
    fn wer_examples() {
        let w = wer(&toks("a b c"), &toks("a b c")).unwrap();
        assert_eq!((w.errors(), w.wer), (0, 0.0));
        let w = wer(&toks("a b c"), &toks("a x c")).unwrap();
        assert_eq!((w.n_sub, w.n_del, w.n_ins), (1, 0, 0));
        assert!((w.wer - 1.0 / 3.0).abs() < 1e-15);
        let w = wer(&toks("a b"), &[]).unwrap();
        assert_eq!((w.n_del, w.wer), (2, 1.0));
        assert!(matches!(
            wer::<String>(&[], &toks("a")),
            Err(AsrError::EmptyReference)
        ));
    }

    #[test]
    fn insertions_push_wer_above_one() {
        let w = wer(&toks("a"), &toks("b c d")).unwrap();
        assert_eq!((w.n_sub, w.n_ins), (1, 2));
        assert_eq!(w.wer, 3.0);
    }

    #[test]
    fn tie_break_prefers_substitution() {
        // "a b" vs "b a": two substitutions and del+ins both cost 2
        let w = wer(&toks("a b"), &toks("b a")).unwrap();
        assert_eq!((w.n_sub, w.n_del, w.n_ins), (2, 0, 0));
    }

    #[test]
    fn corpus_pools_counts() {
        let refs = ts(&[("u1", "a b c d"), ("u2", "e"), ("u3", "f g h i j")]);
        let hyps = ts(&[("u1", "a b c d"), ("u2", "x")]);
        let c = corpus_wer(&refs, &hyps).unwrap();
        assert_eq!(c.missing, ["u3"]);
        assert_eq!(c.total.n_del, 5);
        assert_eq!(c.total.n_sub, 1);
        assert!((c.total.wer - 6.0 / 10.0).abs() < 1e-15);
        assert_eq!(corpus_wer(&refs, &refs).unwrap().total.wer, 0.0);
    }

    #[test]
    fn transcripts_file_round_trip() {
        let t = Transcripts::parse("u1\tHello there\nu2\t\n\nu3\tx y", Path::new("t")).unwrap();
        assert_eq!(t.len(), 3);
        let again = Transcripts::parse(&t.to_tsv(), Path::new("t")).unwrap();
        assert_eq!(t, again);
        match Transcripts::parse("u1\ta\nu1\tb\n", Path::new("t")) {
            Err(AsrError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(
            r in prop::collection::vec(0u8..4, 1..12),
            h in prop::collection::vec(0u8..4, 1..12),
        ) {
            let a = wer(&r, &h).unwrap();
            let b = wer(&h, &r).unwrap();
            prop_assert_eq!(a.errors(), b.errors());
            prop_assert!(a.n_sub + a.n_del <= a.n_ref);
            prop_assert_eq!(a.n_ref - a.n_del + a.n_ins, h.len());
            prop_assert_eq!(wer(&r, &r).unwrap().errors(), 0);
        }
    }
}
