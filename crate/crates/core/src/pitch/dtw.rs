use serde::{Deserialize, Serialize};

use super::correlation::lagged_correlation;
use super::{PitchContour, PitchError};

/// Local cost when exactly one of the two frames is voiced.
pub const VOICING_MISMATCH_COST: f64 = 1.0;

/// Monotone alignment between two sequences, from `(0, 0)` to
/// `(n - 1, m - 1)` with steps `(1, 0)`, `(0, 1)` or `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarpPath {
    pairs: Vec<(usize, usize)>,
}

impl WarpPath {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self, PitchError> {
        if pairs.first() != Some(&(0, 0)) {
            return Err(PitchError::Degenerate(
                "warp path must start at (0, 0)".into(),
            ));
        }
        for w in pairs.windows(2) {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
                return Err(PitchError::Degenerate(format!(
                    "illegal step {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.pairs.iter().all(|&(i, j)| i == j)
    }
}

fn local_cost(a: f64, b: f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => {
            let d = a.ln() - b.ln();
            d * d
        }
        (false, false) => 0.0,
        _ => VOICING_MISMATCH_COST,
    }
}

/// Aligns `anon` onto `orig` with DTW on log-F0.
///
/// Returns the path (pairs of `(anon frame, orig frame)`) and a contour of
/// `orig`'s length whose frame `j` is the mean of the voiced `anon` frames
/// mapped to `j` (unvoiced if none are voiced). `orig` itself is untouched.
pub fn dtw_align(
    anon: &PitchContour,
    orig: &PitchContour,
) -> Result<(WarpPath, PitchContour), PitchError> {
    if anon.voiced_count() < 2 || orig.voiced_count() < 2 {
        return Err(PitchError::Degenerate(format!(
            "both contours need at least 2 voiced frames (anon {}, orig {})",
            anon.voiced_count(),
            orig.voiced_count()
        )));
    }
    let (a, o) = (anon.f0(), orig.f0());
    let (n, m) = (a.len(), o.len());
    let mut acc = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            let c = local_cost(a[i], o[j]);
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = acc[(i - 1) * m + j - 1];
                }
                if i > 0 {
                    best = best.min(acc[(i - 1) * m + j]);
                }
                if j > 0 {
                    best = best.min(acc[i * m + j - 1]);
                }
                best
            };
            acc[i * m + j] = prev + c;
        }
    }

    // backtrace, preferring the diagonal on ties
    let mut pairs = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let step = if i == 0 {
            (0, 1)
        } else if j == 0 {
            (1, 0)
        } else {
            let d = acc[(i - 1) * m + j - 1];
            let up = acc[(i - 1) * m + j];
            let left = acc[i * m + j - 1];
            if d <= up && d <= left {
                (1, 1)
            } else if up <= left {
                (1, 0)
            } else {
                (0, 1)
            }
        };
        i -= step.0;
        j -= step.1;
        pairs.push((i, j));
    }
    pairs.reverse();

    let mut sum = vec![0.0; m];
    let mut count = vec![0usize; m];
    for &(ai, oj) in &pairs {
        if a[ai] > 0.0 {
            sum[oj] += a[ai];
            count[oj] += 1;
        }
    }
    let warped = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok((
        WarpPath::new(pairs)?,
        PitchContour::new(warped, orig.hop_ms())?,
    ))
}

/// Pitch correlation after warping `anon` onto `orig`.
pub fn dtw_pitch_correlation(
    orig: &PitchContour,
    anon: &PitchContour,
) -> Result<Option<f64>, PitchError> {
    let (_, warped) = dtw_align(anon, orig)?;
    Ok(lagged_correlation(orig.f0(), warped.f0()))
}
