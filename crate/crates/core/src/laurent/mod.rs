//! Constant-coefficient theory.
//!
//! A constant-coefficient operator `Σ_k a_k T^k` is described entirely by
//! its Laurent polynomial `p(z) = Σ_k a_k z^k`. Its invertibility on the
//! Sobolev scale at exponent `s` is an annulus criterion: `p` must have no
//! zero with modulus in `[r_s, R_s]`, where the radii are the min/max of
//! `\sqrt{|det ∂g|_x|}·λ_j(x)^{-s}` over the fixed points `x` and the two
//! codifferential eigenvalues `λ_j(x)`.
//!
//! In log-modulus coordinates each radius term is a line in `s`, so the
//! radii are envelopes of lines and the exact set of invertible exponents is
//! computable by envelope level-set queries: a root of modulus `ρ` is
//! avoided exactly on `{s : ln ρ < lower(s)} ∪ {s : ln ρ > upper(s)}`, and
//! the invertible set is the intersection of those pieces over the roots.

pub mod envelope;

pub use envelope::{lower_envelope, upper_envelope, Envelope, Line};

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::FixedPointRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaurentError {
    #[error("laurent: the zero polynomial has no root data")]
    ZeroPolynomial,
    #[error("laurent: root iteration did not converge (max residual {max_residual:.3e})")]
    RootsNonConvergence { max_residual: f64 },
    #[error("laurent: empty fixed-point list")]
    EmptyFixedPointList,
}

/// Trim threshold: coefficients this small in magnitude are dropped from the
/// window ends.
const TRIM_EPS: f64 = 1e-300;

/// A Laurent polynomial `Σ_{k=k_min}^{k_max} a_k z^k` over a finite integer
/// window. The stored window is trimmed so that both end coefficients are
/// nonzero; the zero polynomial has an empty coefficient list.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPolynomial {
    k_min: i64,
    coeffs: Vec<Complex64>,
}

impl LaurentPolynomial {
    pub fn new(k_min: i64, coeffs: Vec<Complex64>) -> Self {
        let mut start = 0;
        let mut end = coeffs.len();
        while start < end && coeffs[start].norm() < TRIM_EPS {
            start += 1;
        }
        while end > start && coeffs[end - 1].norm() < TRIM_EPS {
            end -= 1;
        }
        LaurentPolynomial {
            k_min: k_min + start as i64,
            coeffs: coeffs[start..end].to_vec(),
        }
    }

    pub fn from_real(k_min: i64, coeffs: &[f64]) -> Self {
        LaurentPolynomial::new(
            k_min,
            coeffs.iter().map(|c| Complex64::new(*c, 0.0)).collect(),
        )
    }

    pub fn from_terms(terms: &[(i64, Complex64)]) -> Self {
        if terms.is_empty() {
            return LaurentPolynomial {
                k_min: 0,
                coeffs: Vec::new(),
            };
        }
        let k_min = terms.iter().map(|(k, _)| *k).min().unwrap();
        let k_max = terms.iter().map(|(k, _)| *k).max().unwrap();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (k_max - k_min + 1) as usize];
        for (k, a) in terms {
            coeffs[(k - k_min) as usize] += a;
        }
        LaurentPolynomial::new(k_min, coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `(k_min, k_max)` of the trimmed window.
    pub fn window(&self) -> Option<(i64, i64)> {
        if self.is_zero() {
            None
        } else {
            Some((self.k_min, self.k_min + self.coeffs.len() as i64 - 1))
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, a)| (self.k_min + i as i64, *a))
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Scale all coefficients by a nonzero constant. The root set is exactly
    /// invariant under this.
    pub fn scaled(&self, t: Complex64) -> Self {
        LaurentPolynomial {
            k_min: self.k_min,
            coeffs: self.coeffs.iter().map(|a| a * t).collect(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        // Horner on the polynomial part times z^{k_min}.
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.coeffs.iter().rev() {
            acc = acc * z + a;
        }
        acc * z.powi(self.k_min as i32)
    }

    /// All zeros of `p` in `C∖{0}`, with multiplicity: the roots of the
    /// normalized ordinary polynomial `z^{-k_min}·p(z)`.
    ///
    /// Simultaneous (Durand–Kerner) iteration from a circle of radius
    /// `|a_{k_min}/a_{k_max}|^{1/deg}` rotated by 0.4 rad, followed by one
    /// guarded Newton polish per root. Convergence accepts either a small
    /// simultaneous step or residuals at the evaluation noise floor, which
    /// is what multiple roots stall at.
    pub fn roots(&self) -> Result<Vec<Complex64>, LaurentError> {
        if self.is_zero() {
            return Err(LaurentError::ZeroPolynomial);
        }
        let deg = self.coeffs.len() - 1;
        if deg == 0 {
            return Ok(Vec::new());
        }
        // Monic normalization.
        let lead = self.coeffs[deg];
        let c: Vec<Complex64> = self.coeffs.iter().map(|a| a / lead).collect();
        let eval = |z: Complex64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in c.iter().rev() {
                acc = acc * z + a;
            }
            acc
        };
        let eval_prime = |z: Complex64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, a) in c.iter().enumerate().skip(1).rev() {
                acc = acc * z + a * (i as f64);
            }
            acc
        };
        // Noise floor of Horner evaluation at z.
        let noise = |z: Complex64| -> f64 {
            let mut bound = 0.0;
            let mut zp = 1.0;
            for a in &c {
                bound += a.norm() * zp;
                zp *= z.norm();
            }
            8.0 * (deg as f64) * f64::EPSILON * bound
        };

        let radius = c[0].norm().powf(1.0 / deg as f64).max(1e-6);
        let mut z: Vec<Complex64> = (0..deg)
            .map(|j| {
                let th = 0.4 + std::f64::consts::TAU * (j as f64) / (deg as f64);
                Complex64::from_polar(radius, th)
            })
            .collect();

        let mut converged = false;
        for _ in 0..500 {
            let mut max_step = 0.0f64;
            let mut scale = 1.0f64;
            for j in 0..deg {
                let mut denom = Complex64::new(1.0, 0.0);
                for k in 0..deg {
                    if k != j {
                        denom *= z[j] - z[k];
                    }
                }
                if denom.norm() == 0.0 {
                    // Collided guesses: deterministic nudge.
                    let nudge = Complex64::from_polar(1e-8 * (1.0 + z[j].norm()), 0.7 * j as f64);
                    z[j] += nudge;
                    max_step = f64::INFINITY;
                    continue;
                }
                let step = eval(z[j]) / denom;
                z[j] -= step;
                max_step = max_step.max(step.norm());
                scale = scale.max(z[j].norm());
            }
            if max_step < 1e-13 * scale {
                converged = true;
                break;
            }
            if z.iter().all(|&zj| eval(zj).norm() <= noise(zj)) {
                converged = true;
                break;
            }
        }
        if !converged {
            let max_residual = z.iter().map(|&zj| eval(zj).norm()).fold(0.0, f64::max);
            return Err(LaurentError::RootsNonConvergence { max_residual });
        }
        // One Newton polish per root, kept only when it helps.
        for zj in z.iter_mut() {
            let d = eval_prime(*zj);
            if d.norm() > 0.0 {
                let cand = *zj - eval(*zj) / d;
                if eval(cand).norm() <= eval(*zj).norm() {
                    *zj = cand;
                }
            }
        }
        Ok(z)
    }
}

/// The annulus `{r_s ≤ |z| ≤ R_s}` at one exponent, with the fixed point and
/// eigenvalue index attaining each radius.
#[derive(Debug, Clone, Copy)]
pub struct AnnulusCriterion {
    pub s: f64,
    pub r: f64,
    pub big_r: f64,
    /// `(fixed point index, eigenvalue index)` attaining `r`.
    pub r_source: (usize, usize),
    pub big_r_source: (usize, usize),
}

fn radius_term(fp: &FixedPointRecord, eigen_index: usize, s: f64) -> f64 {
    let lambda = if eigen_index == 0 {
        fp.lambda_min()
    } else {
        fp.lambda_max()
    };
    fp.det_codifferential.abs().sqrt() * lambda.powf(-s)
}

/// Min/max of the `2·|M^g|` radius terms at exponent `s`.
pub fn annulus(
    fixed_points: &[FixedPointRecord],
    s: f64,
) -> Result<AnnulusCriterion, LaurentError> {
    if fixed_points.is_empty() {
        return Err(LaurentError::EmptyFixedPointList);
    }
    let mut out = AnnulusCriterion {
        s,
        r: f64::INFINITY,
        big_r: f64::NEG_INFINITY,
        r_source: (0, 0),
        big_r_source: (0, 0),
    };
    for (i, fp) in fixed_points.iter().enumerate() {
        for j in 0..2 {
            let val = radius_term(fp, j, s);
            if val < out.r {
                out.r = val;
                out.r_source = (i, j);
            }
            if val > out.big_r {
                out.big_r = val;
                out.big_r_source = (i, j);
            }
        }
    }
    Ok(out)
}

/// One radius term in log coordinates: `ln term(s) = intercept + slope·s`
/// with `slope = -ln λ_j(x)` and `intercept = ½ ln |det ∂g|_x|`.
#[derive(Debug, Clone, Copy)]
pub struct LogRadiusLine {
    pub line: Line,
    pub fixed_point: usize,
    pub eigen_index: usize,
}

pub fn log_radius_lines(fixed_points: &[FixedPointRecord]) -> Vec<LogRadiusLine> {
    let mut out = Vec::with_capacity(2 * fixed_points.len());
    for (i, fp) in fixed_points.iter().enumerate() {
        for (j, lambda) in [fp.lambda_min(), fp.lambda_max()].into_iter().enumerate() {
            out.push(LogRadiusLine {
                line: Line::new(-lambda.ln(), 0.5 * fp.det_codifferential.abs().ln()),
                fixed_point: i,
                eigen_index: j,
            });
        }
    }
    out
}

/// Roots within this relative distance of a radius count as inside the
/// (closed) annulus.
const BOUNDARY_TOL: f64 = 1e-12;

/// Annulus test at one exponent. Returns the verdict and, when
/// non-invertible, an offending root.
pub fn is_invertible_constcoef(
    p: &LaurentPolynomial,
    fixed_points: &[FixedPointRecord],
    s: f64,
) -> Result<(bool, Option<Complex64>), LaurentError> {
    if p.is_zero() {
        return Ok((false, None));
    }
    let roots = p.roots()?;
    if roots.is_empty() {
        // A single-term polynomial is a weighted shift power: invertible.
        return Ok((true, None));
    }
    let ann = annulus(fixed_points, s)?;
    for z in roots {
        let rho = z.norm();
        let pad = BOUNDARY_TOL * rho.max(1.0);
        if rho >= ann.r - pad && rho <= ann.big_r + pad {
            return Ok((false, Some(z)));
        }
    }
    Ok((true, None))
}

/// A finite union of disjoint open intervals of exponents, sorted.
/// Unbounded endpoints are ±∞.
#[derive(Debug, Clone, PartialEq)]
pub struct SIntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl SIntervalSet {
    pub fn empty() -> Self {
        SIntervalSet {
            intervals: Vec::new(),
        }
    }

    pub fn full() -> Self {
        SIntervalSet {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    /// Normalize raw open intervals: drop empties, sort, merge overlaps
    /// (touching endpoints stay separate — the shared endpoint is excluded).
    pub fn from_raw(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|(a, b)| a < b);
        raw.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match intervals.last_mut() {
                Some((_, last_b)) if a < *last_b => {
                    *last_b = last_b.max(b);
                }
                _ => intervals.push((a, b)),
            }
        }
        SIntervalSet { intervals }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, s: f64) -> bool {
        self.intervals.iter().any(|(a, b)| s > *a && s < *b)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals == [(f64::NEG_INFINITY, f64::INFINITY)]
    }

    pub fn is_single_interval(&self) -> bool {
        self.intervals.len() == 1
    }

    pub fn intersect(&self, other: &SIntervalSet) -> SIntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a1, b1) = self.intervals[i];
            let (a2, b2) = other.intervals[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo < hi {
                out.push((lo, hi));
            }
            if b1 <= b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        SIntervalSet { intervals: out }
    }
}

/// Exact set of exponents at which the constant-coefficient operator is
/// invertible, via envelope level sets. Endpoints are open: a root exactly
/// on a radius is non-invertible.
pub fn invertible_s_set(
    p: &LaurentPolynomial,
    fixed_points: &[FixedPointRecord],
) -> Result<SIntervalSet, LaurentError> {
    if p.is_zero() {
        return Ok(SIntervalSet::empty());
    }
    if fixed_points.is_empty() {
        return Err(LaurentError::EmptyFixedPointList);
    }
    let roots = p.roots()?;
    if roots.is_empty() {
        return Ok(SIntervalSet::full());
    }
    let lines: Vec<Line> = log_radius_lines(fixed_points)
        .into_iter()
        .map(|l| l.line)
        .collect();
    let lower = lower_envelope(&lines);
    let upper = upper_envelope(&lines);
    let mut set = SIntervalSet::full();
    for z in roots {
        let c = z.norm().ln();
        let mut pieces = Vec::new();
        if let Some(iv) = lower.strict_superlevel(c) {
            pieces.push(iv);
        }
        if let Some(iv) = upper.strict_sublevel(c) {
            pieces.push(iv);
        }
        set = set.intersect(&SIntervalSet::from_raw(pieces));
        if set.is_empty() {
            break;
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{find_fixed_points, ClosedFormMap, FixedPointRecord};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn torus_sine_fps() -> Vec<FixedPointRecord> {
        let g = ClosedFormMap::torus_sine(0.5, 0.25).unwrap();
        find_fixed_points(&g, 12, 1e-12).unwrap()
    }

    fn one_minus_quarter_shift() -> LaurentPolynomial {
        LaurentPolynomial::from_real(0, &[1.0, -0.25])
    }

    #[test]
    fn simple_roots() {
        let p = one_minus_quarter_shift();
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - Complex64::new(4.0, 0.0)).norm() < 1e-12);

        let shift = LaurentPolynomial::from_real(1, &[1.0]);
        assert!(shift.roots().unwrap().is_empty());
    }

    #[test]
    fn double_root_multiplicity() {
        // z⁻¹ - 2 + z = (z-1)²/z
        let p = LaurentPolynomial::from_real(-1, &[1.0, -2.0, 1.0]);
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 2);
        for z in roots {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-6, "root {z}");
        }
    }

    #[test]
    fn root_residuals_are_small() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..40 {
            let k_min = rng.gen_range(-3..=0);
            let deg = rng.gen_range(1..=6usize);
            let coeffs: Vec<f64> = (0..=deg)
                .map(|_| {
                    let mag = rng.gen_range(0.1..3.0);
                    if rng.gen_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            let p = LaurentPolynomial::from_real(k_min, &coeffs);
            let (kmin, kmax) = p.window().unwrap();
            let deg = (kmax - kmin) as i32;
            let max_a = p.max_coeff_norm();
            for z in p.roots().unwrap() {
                let res = p.eval(z).norm();
                let bound = 1e-9 * max_a * z.norm().max(1.0).powi(deg);
                assert!(res < bound, "residual {res} vs {bound} for {p:?}");
            }
        }
    }

    #[test]
    fn annulus_values_for_torus_sine() {
        let fps = torus_sine_fps();
        let a0 = annulus(&fps, 0.0).unwrap();
        assert_relative_eq!(a0.r, (8.0f64 / 15.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(a0.big_r, (8.0f64 / 3.0).sqrt(), max_relative = 1e-12);

        // At s = 1 the smallest of the eight terms comes from the (½, 0)
        // saddle with λ = 2, and the largest from the same saddle's λ = 4/5.
        let a1 = annulus(&fps, 1.0).unwrap();
        assert_relative_eq!(a1.r, (8.0f64 / 5.0).sqrt() / 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            a1.big_r,
            (8.0f64 / 5.0).sqrt() * 1.25,
            max_relative = 1e-12
        );
        let attained = &fps[a1.r_source.0];
        assert!(
            attained
                .point
                .coords
                .x
                .to_bits()
                .abs_diff(0.5f64.to_bits())
                < 4
        );

        // Single fixed point: r = R = sqrt(det ∂g).
        let single = &fps[..1];
        let a = annulus(single, 0.0).unwrap();
        assert_relative_eq!(a.r, a.big_r);
        assert_relative_eq!(
            a.r,
            fps[0].det_codifferential.abs().sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn annulus_radii_square_to_rate_extrema() {
        let fps = torus_sine_fps();
        for i in 0..=400 {
            let s = -5.0 + 10.0 * (i as f64) / 400.0;
            let ann = annulus(&fps, s).unwrap();
            let rates = crate::weights::rate_set(&fps, s);
            let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            assert!(rel(ann.r * ann.r, lo) < 1e-12, "s={s}");
            assert!(rel(ann.big_r * ann.big_r, hi) < 1e-12, "s={s}");
            assert!(ann.r > 0.0 && ann.r <= ann.big_r);
        }
    }

    #[test]
    fn invertibility_examples() {
        let fps = torus_sine_fps();
        let p = one_minus_quarter_shift();
        let (ok, witness) = is_invertible_constcoef(&p, &fps, 0.0).unwrap();
        assert!(ok);
        assert!(witness.is_none());

        let shift = LaurentPolynomial::from_real(1, &[1.0]);
        for s in [-3.0, 0.0, 2.5] {
            assert!(is_invertible_constcoef(&shift, &fps, s).unwrap().0);
        }

        let tm1 = LaurentPolynomial::from_real(0, &[-1.0, 1.0]);
        let (ok, witness) = is_invertible_constcoef(&tm1, &fps, 0.0).unwrap();
        assert!(!ok);
        assert!((witness.unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_roots_count_as_inside() {
        let fps = torus_sine_fps();
        let r0 = annulus(&fps, 0.0).unwrap().r;
        // Root exactly on the inner radius.
        let p = LaurentPolynomial::from_real(0, &[r0, -1.0]);
        let (ok, _) = is_invertible_constcoef(&p, &fps, 0.0).unwrap();
        assert!(!ok);
    }

    #[test]
    fn torus_sine_upper_envelope_vertex() {
        let fps = torus_sine_fps();
        let lines: Vec<Line> = log_radius_lines(&fps).into_iter().map(|l| l.line).collect();
        assert_eq!(lines.len(), 8);
        let up = upper_envelope(&lines);
        let (s, v) = up.extremum();
        assert_relative_eq!(s, 0.5, epsilon = 1e-9);
        assert_relative_eq!(v, 0.5 * 2.0f64.ln(), epsilon = 1e-12);
    }

    /// Bisection on the pointwise annulus test; the independent route that
    /// pins the interval endpoints.
    fn bisect_endpoint(
        p: &LaurentPolynomial,
        fps: &[FixedPointRecord],
        mut inside: f64,
        mut outside: f64,
    ) -> f64 {
        assert!(is_invertible_constcoef(p, fps, inside).unwrap().0);
        assert!(!is_invertible_constcoef(p, fps, outside).unwrap().0);
        for _ in 0..80 {
            let mid = 0.5 * (inside + outside);
            if is_invertible_constcoef(p, fps, mid).unwrap().0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    }

    #[test]
    fn invertible_set_for_one_minus_quarter_shift() {
        let fps = torus_sine_fps();
        let p = one_minus_quarter_shift();
        let set = invertible_s_set(&p, &fps).unwrap();
        assert!(set.is_single_interval(), "{set:?}");
        let (a, b) = set.intervals()[0];

        // Closed forms of the two crossings.
        let left = (0.5 * (8.0f64 / 3.0).ln() - 4.0f64.ln()) / 2.0f64.ln();
        let right = (4.0f64.ln() + 0.5 * (9.0f64 / 8.0).ln()) / 1.5f64.ln();
        assert_relative_eq!(a, left, epsilon = 1e-12);
        assert_relative_eq!(b, right, epsilon = 1e-12);

        // And the independent bisection oracle agrees.
        let left_scan = bisect_endpoint(&p, &fps, 0.0, -2.0);
        let right_scan = bisect_endpoint(&p, &fps, 0.0, 5.0);
        assert_relative_eq!(a, left_scan, epsilon = 1e-9);
        assert_relative_eq!(b, right_scan, epsilon = 1e-9);

        assert_relative_eq!(a, -1.292481250360578, epsilon = 1e-9);
        assert_relative_eq!(b, 3.564266937027182, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_invertible_sets() {
        let fps = torus_sine_fps();
        let tm1 = LaurentPolynomial::from_real(0, &[-1.0, 1.0]);
        assert!(invertible_s_set(&tm1, &fps).unwrap().is_empty());

        let one = LaurentPolynomial::from_real(0, &[1.0]);
        assert!(invertible_s_set(&one, &fps).unwrap().is_full());

        let shift = LaurentPolynomial::from_real(1, &[1.0]);
        assert!(invertible_s_set(&shift, &fps).unwrap().is_full());

        let zero = LaurentPolynomial::from_real(0, &[0.0]);
        assert!(invertible_s_set(&zero, &fps).unwrap().is_empty());
    }

    #[test]
    fn set_matches_grid_scan() {
        let fps = torus_sine_fps();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..10 {
            let k_min = rng.gen_range(-3..=0);
            let deg = rng.gen_range(1..=6usize);
            let coeffs: Vec<f64> = (0..=deg)
                .map(|_| {
                    let mag = rng.gen_range(0.1..3.0);
                    if rng.gen_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            let p = LaurentPolynomial::from_real(k_min, &coeffs);
            let set = invertible_s_set(&p, &fps).unwrap();
            let mut endpoints: Vec<f64> = Vec::new();
            for (a, b) in set.intervals() {
                if a.is_finite() {
                    endpoints.push(*a);
                }
                if b.is_finite() {
                    endpoints.push(*b);
                }
            }
            for i in 0..=16_000 {
                let s = -8.0 + 16.0 * (i as f64) / 16_000.0;
                if endpoints.iter().any(|e| (e - s).abs() < 2e-3) {
                    continue;
                }
                let direct = is_invertible_constcoef(&p, &fps, s).unwrap().0;
                assert_eq!(set.contains(s), direct, "mismatch at s={s} for {p:?}");
            }
        }
    }

    #[test]
    fn scaling_leaves_results_unchanged() {
        let fps = torus_sine_fps();
        let p = LaurentPolynomial::from_real(-1, &[0.7, -1.3, 0.4]);
        let set = invertible_s_set(&p, &fps).unwrap();

        // Powers of two scale coefficients exactly, so results are bitwise
        // identical.
        let doubled = p.scaled(Complex64::new(2.0, 0.0));
        let set2 = invertible_s_set(&doubled, &fps).unwrap();
        assert_eq!(set, set2);
        assert_eq!(
            is_invertible_constcoef(&p, &fps, 0.7).unwrap().0,
            is_invertible_constcoef(&doubled, &fps, 0.7).unwrap().0
        );

        // Arbitrary scalings agree to rounding.
        let tripled = p.scaled(Complex64::new(3.0, 0.0));
        let set3 = invertible_s_set(&tripled, &fps).unwrap();
        assert_eq!(set.intervals().len(), set3.intervals().len());
        for ((a, b), (a3, b3)) in set.intervals().iter().zip(set3.intervals()) {
            assert_relative_eq!(a, a3, epsilon = 1e-9);
            assert_relative_eq!(b, b3, epsilon = 1e-9);
        }
    }

    #[test]
    fn interval_set_operations() {
        let a = SIntervalSet::from_raw(vec![(0.0, 1.0), (2.0, 3.0)]);
        let b = SIntervalSet::from_raw(vec![(0.5, 2.5)]);
        let c = a.intersect(&b);
        assert_eq!(c.intervals(), &[(0.5, 1.0), (2.0, 2.5)]);
        assert!(!c.contains(1.5));
        assert!(c.contains(0.7));
        // Touching open intervals do not merge.
        let d = SIntervalSet::from_raw(vec![(0.0, 1.0), (1.0, 2.0)]);
        assert_eq!(d.intervals().len(), 2);
        assert!(!d.contains(1.0));
    }
}
