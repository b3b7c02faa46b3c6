use super::PitchContour;

/// Fewer jointly voiced frames than this leaves a lag undefined.
pub const MIN_JOINT_VOICED: usize = 5;

/// Resamples `c` to `n` frames: F0 is interpolated linearly between voiced
/// neighbours and the voicing decision comes from the nearest frame.
pub(crate) fn stretch_contour(c: &PitchContour, n: usize) -> Vec<f64> {
    let m = c.len();
    if m == n {
        return c.f0().to_vec();
    }
    let f = c.f0();
    (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 * (m - 1) as f64 / (n - 1) as f64
            } else {
                0.0
            };
            let lo = t.floor() as usize;
            let hi = (lo + 1).min(m - 1);
            let nearest = if t - lo as f64 <= 0.5 { lo } else { hi };
            if f[nearest] == 0.0 {
                0.0
            } else if f[lo] > 0.0 && f[hi] > 0.0 {
                let frac = t - lo as f64;
                f[lo] * (1.0 - frac) + f[hi] * frac
            } else {
                f[nearest]
            }
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let denom = (sxx * syy).sqrt();
    (denom > 0.0).then(|| (sxy / denom).clamp(-1.0, 1.0))
}

/// Lag-maximised Pearson correlation over jointly voiced frames on two
/// equal-length F0 sequences (0 = unvoiced).
pub(crate) fn lagged_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    let max_lag = (n / 10) as i64;
    let mut best: Option<f64> = None;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for lag in -max_lag..=max_lag {
        xs.clear();
        ys.clear();
        for i in 0..n as i64 {
            let j = i + lag;
            if j < 0 || j >= n as i64 {
                continue;
            }
            let (x, y) = (a[i as usize], b[j as usize]);
            if x > 0.0 && y > 0.0 {
                xs.push(x);
                ys.push(y);
            }
        }
        if xs.len() < MIN_JOINT_VOICED {
            continue;
        }
        if let Some(r) = pearson(&xs, &ys) {
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best
}

/// Pitch correlation between an original and an anonymized contour.
///
/// The shorter contour is stretched to the longer one's length, then the
/// Pearson correlation over jointly voiced frames is maximised over integer
/// lags within 10% of the length. Returns `None` when no lag has at least
/// [`MIN_JOINT_VOICED`] jointly voiced frames with non-zero variance.
pub fn pitch_correlation(orig: &PitchContour, anon: &PitchContour) -> Option<f64> {
    if orig.is_empty() || anon.is_empty() {
        return None;
    }
    let n = orig.len().max(anon.len());
    let a = stretch_contour(orig, n);
    let b = stretch_contour(anon, n);
    lagged_correlation(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn contour(f: Vec<f64>) -> PitchContour {
        PitchContour::new(f, 10.0).unwrap()
    }

    fn wavy(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                if i % 17 < 3 {
                    0.0
                } else {
                    150.0 + 40.0 * (i as f64 * 0.13).sin()
                }
            })
            .collect()
    }

    #[test]
    fn self_and_affine_copies() {
        let c = contour(wavy(120));
        assert!((pitch_correlation(&c, &c).unwrap() - 1.0).abs() < 1e-12);
        let affine = contour(
            c.f0()
                .iter()
                .map(|&v| if v > 0.0 { 2.0 * v + 3.0 } else { 0.0 })
                .collect(),
        );
        assert!((pitch_correlation(&c, &affine).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_ramp_is_anticorrelated_at_lag_zero() {
        let up: Vec<f64> = (0..50).map(|i| 100.0 + 2.0 * i as f64).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!((lagged_correlation(&up, &down).unwrap() + 1.0).abs() < 1e-12);
        assert!((pitch_correlation(&contour(up), &contour(down)).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_without_joint_voicing() {
        let a = contour(vec![120.0, 130.0, 125.0, 0.0, 0.0, 0.0]);
        let b = contour(vec![0.0, 0.0, 0.0, 200.0, 210.0, 190.0]);
        assert_eq!(pitch_correlation(&a, &b), None);
        assert_eq!(pitch_correlation(&contour(vec![]), &a), None);
    }

    #[test]
    fn shorter_contour_is_stretched() {
        let long: Vec<f64> = (0..100).map(|i| 100.0 + i as f64).collect();
        let short: Vec<f64> = (0..50).map(|i| 100.0 + 2.0 * i as f64).collect();
        let r = pitch_correlation(&contour(long), &contour(short)).unwrap();
        assert!(r > 0.9999);
        let s = stretch_contour(&contour(vec![100.0, 0.0, 200.0]), 5);
        assert_eq!(s, [100.0, 100.0, 0.0, 0.0, 200.0]);
    }

    proptest! {
        #[test]
        fn symmetric_for_equal_lengths(
            a in prop::collection::vec(prop_oneof![Just(0.0), 60.0f64..500.0], 10..80),
            seed in any::<u64>(),
        ) {
            let b: Vec<f64> = a
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let k = seed.rotate_left(i as u32 % 64) % 100;
                    if k < 10 { 0.0 } else { 60.0 + (v + k as f64 * 3.0) % 400.0 }
                })
                .collect();
            let (ca, cb) = (contour(a), contour(b));
            prop_assert_eq!(pitch_correlation(&ca, &cb), pitch_correlation(&cb, &ca));
        }

        #[test]
        fn positive_scaling_gives_one(
            a in prop::collection::vec(60.0f64..250.0, 10..80),
            k in 1.0f64..2.0,
        ) {
            let b: Vec<f64> = a.iter().map(|v| v * k).collect();
            if let Some(r) = pitch_correlation(&contour(a), &contour(b)) {
                prop_assert!((r - 1.0).abs() < 1e-9);
            }
        }
    }
}
