use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::{DspError, LpcModel};

/// Rotated angles are kept at least this far (radians) from 0 and pi so
/// that complex poles never collapse onto the real axis.
pub const ANGLE_GUARD: f64 = 0.001;

pub const MAX_ROOT_ITERATIONS: usize = 1000;

/// Roots whose imaginary part is below this (relative) are treated as real.
const REAL_TOLERANCE: f64 = 1e-6;
/// Allowed max relative coefficient error when rebuilding from roots.
const REBUILD_TOLERANCE: f64 = 1e-6;
const SYMMETRY_TOLERANCE: f64 = 1e-9;
const IMAG_RESIDUE_TOLERANCE: f64 = 1e-9;

/// A root of `A(z)` in polar form. `angle` lies in `(-pi, pi]`; real roots
/// have angle exactly `0` or `pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub radius: f64,
    pub angle: f64,
}

impl Pole {
    pub fn new(radius: f64, angle: f64) -> Self {
        Self { radius, angle }
    }

    pub fn from_complex(z: Complex64) -> Self {
        let (radius, angle) = z.to_polar();
        Self { radius, angle }
    }

    pub fn to_complex(self) -> Complex64 {
        if self.angle == 0.0 {
            Complex64::new(self.radius, 0.0)
        } else if self.angle == PI {
            Complex64::new(-self.radius, 0.0)
        } else {
            Complex64::from_polar(self.radius, self.angle)
        }
    }

    pub fn is_real(&self) -> bool {
        self.angle == 0.0 || self.angle == PI
    }

    fn conjugate(self) -> Self {
        Self {
            radius: self.radius,
            angle: -self.angle,
        }
    }
}

/// Roots of a real polynomial, closed under complex conjugation.
///
/// Stored canonically: real poles first (ascending by value), then each
/// complex pair as `(upper, lower)` ordered by ascending upper angle.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    poles: Vec<Pole>,
}

impl PoleSet {
    /// Validates conjugate symmetry and canonicalizes the ordering.
    pub fn new(poles: Vec<Pole>) -> Result<Self, DspError> {
        let mut real = Vec::new();
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for p in poles {
            if !(p.radius.is_finite() && p.angle.is_finite()) || p.radius < 0.0 {
                return Err(DspError::AsymmetricPoles(format!("invalid pole {p:?}")));
            }
            if p.is_real() {
                real.push(p);
            } else if p.angle > 0.0 && p.angle < PI {
                upper.push(p);
            } else if p.angle < 0.0 && p.angle > -PI {
                lower.push(p);
            } else {
                return Err(DspError::AsymmetricPoles(format!(
                    "angle {} outside (-pi, pi]",
                    p.angle
                )));
            }
        }
        if upper.len() != lower.len() {
            return Err(DspError::AsymmetricPoles(format!(
                "{} poles above the real axis but {} below",
                upper.len(),
                lower.len()
            )));
        }
        let by_angle = |a: &Pole, b: &Pole| {
            a.angle
                .abs()
                .total_cmp(&b.angle.abs())
                .then(a.radius.total_cmp(&b.radius))
        };
        upper.sort_by(by_angle);
        lower.sort_by(by_angle);
        let mut out = Vec::with_capacity(real.len() + 2 * upper.len());
        real.sort_by(|a, b| a.to_complex().re.total_cmp(&b.to_complex().re));
        out.extend(real);
        for (u, l) in upper.iter().zip(&lower) {
            if (u.radius - l.radius).abs() > SYMMETRY_TOLERANCE * u.radius.max(1.0)
                || (u.angle + l.angle).abs() > SYMMETRY_TOLERANCE
            {
                return Err(DspError::AsymmetricPoles(format!(
                    "pole {u:?} has no conjugate partner (nearest {l:?})"
                )));
            }
            out.push(*u);
            out.push(u.conjugate());
        }
        Ok(Self { poles: out })
    }

    /// Builds a symmetric set from raw complex roots, snapping near-real
    /// roots onto the axis and averaging each near-conjugate pair.
    pub fn from_roots(roots: &[Complex64]) -> Result<Self, DspError> {
        let mut poles = Vec::with_capacity(roots.len());
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for &z in roots {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(DspError::AsymmetricPoles(format!("non-finite root {z}")));
            }
            if z.im.abs() <= REAL_TOLERANCE * z.norm().max(1.0) {
                let angle = if z.re < 0.0 { PI } else { 0.0 };
                poles.push(Pole::new(z.re.abs(), angle));
            } else if z.im > 0.0 {
                upper.push(z);
            } else {
                lower.push(z);
            }
        }
        if upper.len() != lower.len() {
            return Err(DspError::AsymmetricPoles(format!(
                "{} roots above the real axis but {} below",
                upper.len(),
                lower.len()
            )));
        }
        for u in upper {
            let (idx, _) = lower
                .iter()
                .enumerate()
                .map(|(i, l)| (i, (u - l.conj()).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("counts checked above");
            let l = lower.swap_remove(idx);
            let p = Pole::from_complex((u + l.conj()) / 2.0);
            poles.push(p);
            poles.push(p.conjugate());
        }
        Self::new(poles)
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.poles.iter().map(|p| p.radius).fold(0.0, f64::max)
    }

    fn map_radii(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            poles: self
                .poles
                .iter()
                .map(|p| Pole::new(f(p.radius), p.angle))
                .collect(),
        }
    }

    pub(crate) fn clamp_radius(&self, max_radius: f64) -> Self {
        self.map_radii(|r| r.min(max_radius))
    }
}

/// Evaluates `p(z)` and `p'(z)` for a polynomial in descending powers.
fn horner_with_derivative(poly: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(poly[0], 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in &poly[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Rounding-error bound on evaluating `poly` at `|z|`.
fn evaluation_bound(poly: &[f64], abs_z: f64) -> f64 {
    let mut acc = 0.0;
    for &c in poly {
        acc = acc * abs_z + c.abs();
    }
    8.0 * f64::EPSILON * acc
}

/// Aberth–Ehrlich simultaneous iteration. Returns the roots and whether
/// every root reached the rounding-error floor.
fn aberth(poly: &[f64]) -> (Vec<Complex64>, bool) {
    let degree = poly.len() - 1;
    let centre = -poly[1] / degree as f64;
    let tail = poly[degree].abs();
    let radius = if tail > 0.0 {
        tail.powf(1.0 / degree as f64).max(1e-3)
    } else {
        0.5
    };
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / degree as f64 + 0.4;
            Complex64::new(centre, 0.0) + Complex64::from_polar(radius, theta)
        })
        .collect();
    let mut done = vec![false; degree];

    for _ in 0..MAX_ROOT_ITERATIONS {
        for k in 0..degree {
            if done[k] {
                continue;
            }
            let z = roots[k];
            let (p, dp) = horner_with_derivative(poly, z);
            if p.norm() <= evaluation_bound(poly, z.norm()) {
                done[k] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &zj)| (z - zj).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                roots[k] = z - step;
            }
        }
        if done.iter().all(|&d| d) {
            return (roots, true);
        }
    }
    (roots, false)
}

/// Eigenvalues of the companion matrix.
fn companion_roots(poly: &[f64]) -> Option<Vec<Complex64>> {
    let degree = poly.len() - 1;
    let mut m = DMatrix::<f64>::zeros(degree, degree);
    for j in 0..degree {
        m[(0, j)] = -poly[j + 1];
    }
    for i in 1..degree {
        m[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(m, f64::EPSILON, 100 * MAX_ROOT_ITERATIONS)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Multiplies out `prod (z - r)` in complex arithmetic.
fn expand_roots(roots: impl IntoIterator<Item = Complex64>) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        c.push(Complex64::new(0.0, 0.0));
        for i in (1..c.len()).rev() {
            let prev = c[i - 1];
            c[i] -= r * prev;
        }
    }
    c
}

fn rebuild_error(poly: &[f64], poles: &PoleSet) -> f64 {
    let rebuilt = expand_roots(poles.poles.iter().map(|p| p.to_complex()));
    let scale = poly.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    poly.iter()
        .zip(&rebuilt)
        .map(|(a, b)| (a - b.re).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Roots of a monic real polynomial given in descending powers, as a
/// conjugate-symmetric pole set.
///
/// Aberth–Ehrlich iteration first; the companion-matrix eigenvalues are
/// used when it fails to converge or its roots do not rebuild the
/// polynomial to within tolerance.
pub fn find_polynomial_roots(poly: &[f64]) -> Result<PoleSet, DspError> {
    if poly.len() < 2 || poly[0] != 1.0 {
        return Err(DspError::InvalidParameter(
            "expected a monic polynomial of degree >= 1".into(),
        ));
    }
    let (raw, converged) = aberth(poly);
    let mut best_error = f64::INFINITY;
    if converged {
        if let Ok(set) = PoleSet::from_roots(&raw) {
            let err = rebuild_error(poly, &set);
            if err <= REBUILD_TOLERANCE {
                return Ok(set);
            }
            best_error = err;
        }
    }
    if let Some(set) = companion_roots(poly).and_then(|r| PoleSet::from_roots(&r).ok()) {
        let err = rebuild_error(poly, &set);
        if err <= REBUILD_TOLERANCE {
            return Ok(set);
        }
        best_error = best_error.min(err);
    }
    Err(DspError::RootFinding {
        iterations: MAX_ROOT_ITERATIONS,
        rebuild_error: best_error,
    })
}

/// Poles of the LPC synthesis filter: the roots of
/// `z^p + a_1 z^(p-1) + ... + a_p`.
pub fn polynomial_roots(model: &LpcModel) -> Result<PoleSet, DspError> {
    find_polynomial_roots(&model.polynomial())
}

/// Raises the angle of every complex pole to the power `alpha`, keeping
/// radii and conjugate pairing. Real poles are left alone.
pub fn rotate_poles(poles: &PoleSet, alpha: f64) -> PoleSet {
    let rotate = |phi: f64| phi.powf(alpha).clamp(ANGLE_GUARD, PI - ANGLE_GUARD);
    let poles = poles
        .poles
        .iter()
        .map(|p| {
            let phi = p.angle;
            if phi > ANGLE_GUARD && phi < PI - ANGLE_GUARD {
                Pole::new(p.radius, rotate(phi))
            } else if phi < -ANGLE_GUARD && phi > -(PI - ANGLE_GUARD) {
                Pole::new(p.radius, -rotate(-phi))
            } else {
                *p
            }
        })
        .collect();
    // pairs stay adjacent and exactly mirrored, so the canonical layout holds
    PoleSet { poles }
}

/// Expands a pole set back into an LPC model with unit gain.
pub fn poly_from_roots(poles: &PoleSet) -> Result<LpcModel, DspError> {
    let full = expand_roots(poles.poles.iter().map(|p| p.to_complex()));
    let scale = full.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
    let residue = full.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOLERANCE * scale {
        return Err(DspError::AsymmetricPoles(format!(
            "imaginary residue {residue:.3e} after expansion"
        )));
    }
    LpcModel::new(full[1..].iter().map(|c| c.re).collect(), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn compare_poles(a: &Pole, b: &Pole) -> std::cmp::Ordering {
        a.angle
            .total_cmp(&b.angle)
            .then(a.radius.total_cmp(&b.radius))
    }

    fn model(coeffs: &[f64]) -> LpcModel {
        LpcModel::new(coeffs.to_vec(), 1.0).unwrap()
    }

    /// Random stable order-`2 * pairs` pole set.
    fn random_stable(rng: &mut ChaCha8Rng, pairs: usize) -> PoleSet {
        let mut poles = Vec::new();
        for _ in 0..pairs {
            let r = rng.random_range(0.05..0.98);
            let phi = rng.random_range(0.02..PI - 0.02);
            poles.push(Pole::new(r, phi));
            poles.push(Pole::new(r, -phi));
        }
        PoleSet::new(poles).unwrap()
    }

    #[test]
    fn double_real_root() {
        let set = polynomial_roots(&model(&[-1.0, 0.25])).unwrap();
        assert_eq!(set.len(), 2);
        for p in set.poles() {
            assert!(p.is_real());
            assert!((p.to_complex() - Complex64::new(0.5, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn imaginary_pair() {
        let set = polynomial_roots(&model(&[0.0, 0.81])).unwrap();
        let p = set.poles();
        assert!((p[0].radius - 0.9).abs() < 1e-12);
        assert!((p[0].angle - PI / 2.0).abs() < 1e-12);
        assert_eq!(p[1].angle, -p[0].angle);
    }

    #[test]
    fn expand_known_sets() {
        let m = poly_from_roots(&PoleSet::new(vec![Pole::new(0.5, 0.0); 2]).unwrap()).unwrap();
        assert_eq!(m.coeffs(), &[-1.0, 0.25]);
        let set = PoleSet::new(vec![Pole::new(0.9, PI / 2.0), Pole::new(0.9, -PI / 2.0)]).unwrap();
        let m = poly_from_roots(&set).unwrap();
        assert!(m.coeffs()[0].abs() < 1e-15);
        assert!((m.coeffs()[1] - 0.81).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_sets_are_rejected() {
        assert!(matches!(
            PoleSet::new(vec![Pole::new(0.9, 0.5), Pole::new(0.9, -0.6)]),
            Err(DspError::AsymmetricPoles(_))
        ));
        assert!(PoleSet::new(vec![Pole::new(0.9, 0.5), Pole::new(0.2, 0.0)]).is_err());
    }

    #[test]
    fn rotation_of_single_pair() {
        let set = PoleSet::new(vec![Pole::new(0.95, 0.5), Pole::new(0.95, -0.5)]).unwrap();
        let rot = rotate_poles(&set, 0.8);
        let expected = 0.5f64.powf(0.8);
        assert!((expected - 0.5743).abs() < 1e-4);
        assert!((rot.poles()[0].angle - expected).abs() < 1e-12);
        assert_eq!(rot.poles()[1].angle, -rot.poles()[0].angle);
        assert_eq!(rot.poles()[0].radius, 0.95);
    }

    #[test]
    fn real_poles_and_unit_alpha_are_fixed_points() {
        let set = PoleSet::new(vec![
            Pole::new(0.3, 0.0),
            Pole::new(0.6, PI),
            Pole::new(0.9, 2.0),
            Pole::new(0.9, -2.0),
        ])
        .unwrap();
        assert_eq!(rotate_poles(&set, 1.0), set);
        let rot = rotate_poles(&set, 1.7);
        assert_eq!(rot.poles()[0], set.poles()[0]);
        assert_eq!(rot.poles()[1], set.poles()[1]);
        // 2^1.7 > pi - guard: clamped
        assert_eq!(rot.poles()[2].angle, PI - ANGLE_GUARD);
    }

    #[test]
    fn round_trip_thousand_random_order_20_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(2022);
        for trial in 0..1000 {
            let poles = random_stable(&mut rng, 10);
            let m = poly_from_roots(&poles).unwrap();
            let found = polynomial_roots(&m).unwrap();
            let back = poly_from_roots(&found).unwrap();
            let scale = m.coeffs().iter().fold(1.0f64, |s, c| s.max(c.abs()));
            let err = m
                .coeffs()
                .iter()
                .zip(back.coeffs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / scale;
            assert!(err < 1e-6, "trial {trial}: {err}");
        }
    }

    #[test]
    fn roots_then_expand_recovers_pole_multiset() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let poles = random_stable(&mut rng, 4);
            let found = polynomial_roots(&poly_from_roots(&poles).unwrap()).unwrap();
            let mut a = poles.poles().to_vec();
            let mut b = found.poles().to_vec();
            a.sort_by(compare_poles);
            b.sort_by(compare_poles);
            for (p, q) in a.iter().zip(&b) {
                assert!((p.to_complex() - q.to_complex()).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn companion_fallback_agrees_with_aberth() {
        let poly = [1.0, -1.2, 0.9, -0.3, 0.05];
        let mut a = companion_roots(&poly).unwrap();
        let (mut b, ok) = aberth(&poly);
        assert!(ok);
        let key = |z: &Complex64, w: &Complex64| z.re.total_cmp(&w.re).then(z.im.total_cmp(&w.im));
        a.sort_by(key);
        b.sort_by(key);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn rotation_preserves_symmetry_and_radii(seed in 0u64..10_000, alpha in 0.05f64..1.95) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = random_stable(&mut rng, 5);
            let rot = rotate_poles(&set, alpha);
            prop_assert!(PoleSet::new(rot.poles().to_vec()).is_ok());
            for (p, q) in set.poles().iter().zip(rot.poles()) {
                prop_assert_eq!(p.radius, q.radius);
                prop_assert!(q.angle.abs() >= ANGLE_GUARD && q.angle.abs() <= PI - ANGLE_GUARD);
            }
            for pair in rot.poles().chunks(2) {
                prop_assert_eq!(pair[0].angle, -pair[1].angle);
            }
        }
    }
}
