//! Sobolev weight sequences along orbits.
//!
//! For a base point `x`, a covector `ξ` and an exponent `s`, the weight
//! `W(n)` measures the pullback of `μ·σ(Δ^s)` along the orbit `gⁿx`. Three
//! realizations of that pullback are provided; the default `T1Pinned` is the
//! one whose exponential rates reproduce the predicted fixed-point rates on
//! the linear model (see the tests), with the alternatives kept selectable
//! for comparison:
//!
//! * `T1Pinned`:       `W(n) = |det ∂gⁿ(x)| · μ(gⁿx)/μ(x) · ‖dgⁿ(x)·ξ♯‖_g^{2s}`
//! * `FuncPullback`:   `W(n) = μ(gⁿx)/μ(x) · (|∂gⁿ(x)ξ|²_g)^s`
//! * `DensityForward`: `W(n) = |det dgⁿ(x)| · μ(gⁿx)/μ(x) · (|∂gⁿ(x)ξ|²_g)^s`
//!
//! All three agree at `n = 0` with `(|ξ|²_g)^s`. Every log-weight is affine
//! in `s`, so a [`WeightProfile`] caches the orbit data once and serves all
//! exponents.
//!
//! Sign conventions for fitted rates: `theta_plus` is the least-squares
//! slope of `log W` over the trailing forward window, so `W(n) ≍ exp(θ̂₊ n)`
//! as `n → +∞`. `theta_minus` is the negated slope over the trailing
//! backward window, i.e. the per-step log-growth walking toward `-∞`; for a
//! weight equivalent to `rⁿ` as `n → -∞` it converges to `-ln r`.

use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};

use crate::dynamics::{
    limit_points, Diffeo, Direction, DynamicsError, FixedPointRecord, OrbitWalker,
};
use crate::geometry::{Covector, SurfacePoint, Variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightConvention {
    T1Pinned,
    FuncPullback,
    DensityForward,
}

impl WeightConvention {
    pub fn name(self) -> &'static str {
        match self {
            WeightConvention::T1Pinned => "t1_pinned",
            WeightConvention::FuncPullback => "func_pullback",
            WeightConvention::DensityForward => "density_forward",
        }
    }

    pub fn all() -> [WeightConvention; 3] {
        [
            WeightConvention::T1Pinned,
            WeightConvention::FuncPullback,
            WeightConvention::DensityForward,
        ]
    }
}

impl FromStr for WeightConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t1_pinned" => Ok(WeightConvention::T1Pinned),
            "func_pullback" => Ok(WeightConvention::FuncPullback),
            "density_forward" => Ok(WeightConvention::DensityForward),
            other => Err(format!(
                "unknown weight convention `{other}` (expected t1_pinned, func_pullback or density_forward)"
            )),
        }
    }
}

/// Orbit data for one `(x, ξ, convention)` triple: `log W(n, s) = base(n) + s·slope(n)`.
pub struct WeightProfile {
    pub n_min: i64,
    pub n_max: i64,
    base: Vec<f64>,
    slope: Vec<f64>,
}

impl WeightProfile {
    pub fn log_weight(&self, n: i64, s: f64) -> f64 {
        let idx = (n - self.n_min) as usize;
        self.base[idx] + s * self.slope[idx]
    }

    pub fn log_values(&self, s: f64) -> Vec<f64> {
        (self.n_min..=self.n_max)
            .map(|n| self.log_weight(n, s))
            .collect()
    }
}

/// Walk the orbit of `x` and collect the affine-in-`s` log-weight data over
/// `n ∈ [n_min, n_max]`.
pub fn weight_profile(
    d: &dyn Diffeo,
    x: &SurfacePoint,
    xi: &Covector,
    convention: WeightConvention,
    n_min: i64,
    n_max: i64,
) -> Result<WeightProfile, DynamicsError> {
    assert!(n_min <= 0 && n_max >= 0 && n_min >= -10_000 && n_max <= 10_000);
    let surface = d.surface();
    let tangent = surface.raise(xi);
    let len = (n_max - n_min + 1) as usize;
    let mut base = vec![0.0; len];
    let mut slope = vec![0.0; len];
    let log_mu_x = surface.area_density(x).ln();

    let mut record = |n: i64, walker: Option<&OrbitWalker>| -> Result<(), DynamicsError> {
        let idx = (n - n_min) as usize;
        let (point, log_det_dg, dg, dg_scale, codg, codg_scale) = match walker {
            Some(w) => {
                let (dg, dg_scale) = w.dg_scaled();
                let (codg, codg_scale) = w.codg_scaled();
                (w.point, w.log_abs_det_dg, dg, dg_scale, codg, codg_scale)
            }
            None => (
                *x,
                0.0,
                Matrix2::identity(),
                0.0,
                Matrix2::identity(),
                0.0,
            ),
        };
        let mu_ratio = surface.area_density(&point).ln() - log_mu_x;
        match convention {
            WeightConvention::T1Pinned => {
                let moved = Covector {
                    point,
                    components: dg * tangent.components,
                    variance: Variance::Tangent,
                };
                let norm2 = surface.tangent_norm2(&moved);
                if norm2 <= 0.0 || !norm2.is_finite() {
                    return Err(DynamicsError::Unsupported(
                        "degenerate transported tangent in weight".into(),
                    ));
                }
                base[idx] = -log_det_dg + mu_ratio;
                slope[idx] = norm2.ln() + 2.0 * dg_scale;
            }
            WeightConvention::FuncPullback | WeightConvention::DensityForward => {
                let moved = Covector {
                    point,
                    components: codg * xi.components,
                    variance: Variance::Covector,
                };
                let norm2 = surface.cometric_norm2(&moved);
                if norm2 <= 0.0 || !norm2.is_finite() {
                    return Err(DynamicsError::Unsupported(
                        "degenerate transported covector in weight".into(),
                    ));
                }
                base[idx] = if convention == WeightConvention::DensityForward {
                    log_det_dg + mu_ratio
                } else {
                    mu_ratio
                };
                slope[idx] = norm2.ln() + 2.0 * codg_scale;
            }
        }
        Ok(())
    };

    record(0, None)?;
    let mut fwd = OrbitWalker::new(d, *x, Direction::Forward);
    for n in 1..=n_max {
        fwd.step()?;
        record(n, Some(&fwd))?;
    }
    let mut bwd = OrbitWalker::new(d, *x, Direction::Backward);
    for n in 1..=(-n_min) {
        bwd.step()?;
        record(-n, Some(&bwd))?;
    }
    Ok(WeightProfile {
        n_min,
        n_max,
        base,
        slope,
    })
}

/// Single weight value; see [`weight_profile`] for the log-space accessor
/// that cannot overflow.
pub fn weight(
    d: &dyn Diffeo,
    x: &SurfacePoint,
    xi: &Covector,
    s: f64,
    n: i64,
    convention: WeightConvention,
) -> Result<f64, DynamicsError> {
    let profile = weight_profile(d, x, xi, convention, n.min(0), n.max(0))?;
    Ok(profile.log_weight(n, s).exp())
}

const FIT_WINDOW: i64 = 30;
const FIT_RELIABLE_RMS: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub reliable_plus: bool,
    pub reliable_minus: bool,
}

#[derive(Debug, Clone)]
pub struct WeightSeries {
    pub s: f64,
    pub convention: WeightConvention,
    pub n_min: i64,
    pub n_max: i64,
    pub log_values: Vec<f64>,
    pub fit: RateFit,
}

fn ls_slope(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let n = pairs.clone().count() as f64;
    let mean_x = pairs.clone().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = pairs.clone().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = pairs.clone().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = pairs
        .clone()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rms = (pairs
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

/// Sample the weight over `n ∈ [n_min, n_max]` at one exponent and fit the
/// exponential rates over the trailing windows at both ends.
pub fn weight_series(
    d: &dyn Diffeo,
    x: &SurfacePoint,
    xi: &Covector,
    s: f64,
    n_min: i64,
    n_max: i64,
    convention: WeightConvention,
) -> Result<WeightSeries, DynamicsError> {
    let profile = weight_profile(d, x, xi, convention, n_min, n_max)?;
    Ok(series_from_profile(&profile, s, convention))
}

pub fn series_from_profile(
    profile: &WeightProfile,
    s: f64,
    convention: WeightConvention,
) -> WeightSeries {
    let log_values = profile.log_values(s);
    let (n_min, n_max) = (profile.n_min, profile.n_max);
    let window = |lo: i64, hi: i64| {
        let values = &log_values;
        (lo..=hi).map(move |n| (n as f64, values[(n - n_min) as usize]))
    };
    let fwd_lo = (n_max - FIT_WINDOW).max(n_min);
    let (slope_plus, residual_plus) = ls_slope(window(fwd_lo, n_max));
    let bwd_hi = (n_min + FIT_WINDOW).min(n_max);
    let (slope_minus, residual_minus) = ls_slope(window(n_min, bwd_hi));
    WeightSeries {
        s,
        convention,
        n_min,
        n_max,
        log_values,
        fit: RateFit {
            theta_plus: slope_plus,
            theta_minus: -slope_minus,
            residual_plus,
            residual_minus,
            reliable_plus: residual_plus <= FIT_RELIABLE_RMS,
            reliable_minus: residual_minus <= FIT_RELIABLE_RMS,
        },
    }
}

/// Predicted weight rates at the orbit's limit fixed points: per end, the
/// generic branch and the exceptional branch, as multiplicative rates `r`
/// with `W(n) ≍ rⁿ` at that end.
#[derive(Debug, Clone, Copy)]
pub struct PredictedRates {
    pub s: f64,
    pub forward_generic: f64,
    pub forward_exceptional: f64,
    pub backward_generic: f64,
    pub backward_exceptional: f64,
}

impl PredictedRates {
    /// Rates translated into the fitted-theta convention: forward rates map
    /// to `ln r`, backward rates to `-ln r` (see the module docs).
    pub fn as_thetas(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.forward_generic.ln(), self.forward_exceptional.ln()),
            (-self.backward_generic.ln(), -self.backward_exceptional.ln()),
        )
    }
}

pub fn predicted_rates(
    fp_plus: &FixedPointRecord,
    fp_minus: &FixedPointRecord,
    s: f64,
) -> PredictedRates {
    let rate = |fp: &FixedPointRecord, lambda: f64| -> f64 {
        (fp.det_codifferential / lambda.powf(2.0 * s)).abs()
    };
    PredictedRates {
        s,
        forward_generic: rate(fp_plus, fp_plus.lambda_min()),
        forward_exceptional: rate(fp_plus, fp_plus.lambda_max()),
        backward_generic: rate(fp_minus, fp_minus.lambda_max()),
        backward_exceptional: rate(fp_minus, fp_minus.lambda_min()),
    }
}

/// The full rate set `{|det ∂g|_x| · λ_j(x)^{-2s}}` over all fixed points
/// and both codifferential eigenvalues.
pub fn rate_set(fixed_points: &[FixedPointRecord], s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(fixed_points.len() * 2);
    for fp in fixed_points {
        for lambda in [fp.lambda_min(), fp.lambda_max()] {
            out.push((fp.det_codifferential / lambda.powf(2.0 * s)).abs());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Plus,
    Minus,
}

/// One-dimensional tangent line along which the weight follows the
/// exceptional branch at the given end.
#[derive(Debug, Clone, Copy)]
pub struct InvariantDirection {
    pub end: End,
    /// Unit tangent at `x`, in `x`'s chart.
    pub direction: Vector2<f64>,
    pub steps_used: usize,
    pub final_angle_delta: f64,
}

fn adjugate(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

fn line_angle(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    u.dot(v).abs().min(1.0).acos()
}

const DIRECTION_MAX_STEPS: usize = 500;
const DIRECTION_CHECK_EVERY: usize = 5;
const DIRECTION_ANGLE_TOL: f64 = 1e-8;

/// Compute the exceptional direction at `x` by pulling the limit fixed
/// point's distinguished eigendirection back along the orbit until the
/// pulled-back line settles.
pub fn invariant_direction(
    d: &dyn Diffeo,
    fixed_points: &[FixedPointRecord],
    x: &SurfacePoint,
    end: End,
) -> Result<InvariantDirection, DynamicsError> {
    let lim = limit_points(d, fixed_points, x, 1e-9, 100_000)?;
    let (fp, dir) = match end {
        End::Plus => (&fixed_points[lim.plus], Direction::Forward),
        End::Minus => (&fixed_points[lim.minus], Direction::Backward),
    };
    // Forward end: the most contracted direction at x is the pullback of the
    // α_min eigendirection at x₊. Backward end: the α_max eigendirection at x₋.
    let seed = match end {
        End::Plus => fp.alpha_min_dir(),
        End::Minus => fp.alpha_max_dir(),
    };
    let mut walker = OrbitWalker::new(d, *x, dir);
    let mut prev: Option<Vector2<f64>> = None;
    while walker.steps < DIRECTION_MAX_STEPS {
        for _ in 0..DIRECTION_CHECK_EVERY {
            walker.step()?;
        }
        let (m, _) = walker.dg_scaled();
        // The eigendirection lives at the fixed point; express it in the
        // chart the orbit currently occupies.
        let seed_here = if walker.point.chart == fp.point.chart {
            seed
        } else {
            let c = d
                .surface()
                .transition_jacobian(&fp.point, walker.point.chart)?;
            c * seed
        };
        let pulled = adjugate(&m) * seed_here;
        let norm = pulled.norm();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let candidate = pulled / norm;
        if let Some(p) = prev {
            let delta = line_angle(&candidate, &p);
            if delta < DIRECTION_ANGLE_TOL {
                return Ok(InvariantDirection {
                    end,
                    direction: candidate,
                    steps_used: walker.steps,
                    final_angle_delta: delta,
                });
            }
        }
        prev = Some(candidate);
    }
    Err(DynamicsError::DirectionNonConvergence {
        max_n: DIRECTION_MAX_STEPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{find_fixed_points, jacobian, ClosedFormMap};
    use crate::geometry::Torus;
    use approx::assert_relative_eq;

    fn torus_sine() -> ClosedFormMap {
        ClosedFormMap::torus_sine(0.5, 0.25).unwrap()
    }

    /// Linear model: the sink-side local picture `g(v) = diag(1/2, 3/4) v`
    /// realized as a torus chart map with unit density. Closed-form matrix
    /// powers pin the convention.
    fn linear_contraction() -> ClosedFormMap {
        let fwd = [["0.5*x1".to_string(), "0.75*x2".to_string()]];
        let jac = [[
            "0.5".to_string(),
            "0".to_string(),
            "0".to_string(),
            "0.75".to_string(),
        ]];
        ClosedFormMap::from_strings(Torus::shared(), &fwd, None, Some(&jac), "linear model")
            .unwrap()
    }

    #[test]
    fn linear_oracle_pins_t1_convention() {
        let g = linear_contraction();
        let x = SurfacePoint::new(0, 0.9, 0.7);
        for (v1, v2) in [(1.0, 0.0), (0.0, 1.0), (2.0, -1.0)] {
            let xi = Covector::covector(x, v1, v2).unwrap();
            let profile =
                weight_profile(&g, &x, &xi, WeightConvention::T1Pinned, 0, 20).unwrap();
            for s in [-1.0, 0.0, 1.0, 2.0] {
                for n in 0..=20i64 {
                    let pow = n as f64;
                    let dn1 = 0.5f64.powf(pow) * v1;
                    let dn2 = 0.75f64.powf(pow) * v2;
                    let expected = pow * (8.0f64 / 3.0).ln()
                        + s * (dn1 * dn1 + dn2 * dn2).ln();
                    assert_relative_eq!(
                        profile.log_weight(n, s),
                        expected,
                        epsilon = 1e-10,
                        max_relative = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn alternative_conventions_match_their_closed_forms() {
        let g = linear_contraction();
        let x = SurfacePoint::new(0, 0.9, 0.7);
        let xi = Covector::covector(x, 1.0, 1.0).unwrap();
        let s = 1.0;
        let func = weight_profile(&g, &x, &xi, WeightConvention::FuncPullback, 0, 15).unwrap();
        let dens = weight_profile(&g, &x, &xi, WeightConvention::DensityForward, 0, 15).unwrap();
        for n in 0..=15i64 {
            let pow = n as f64;
            // ∂gⁿ ξ = diag(2ⁿ, (4/3)ⁿ) ξ
            let c1 = 2.0f64.powf(pow);
            let c2 = (4.0f64 / 3.0).powf(pow);
            let norm2 = (c1 * c1 + c2 * c2).ln();
            assert_relative_eq!(func.log_weight(n, s), s * norm2, epsilon = 1e-9);
            assert_relative_eq!(
                dens.log_weight(n, s),
                pow * (3.0f64 / 8.0).ln() + s * norm2,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn all_conventions_agree_at_n_zero() {
        let g = torus_sine();
        let x = SurfacePoint::new(0, 0.3, 0.2);
        let xi = Covector::covector(x, 0.6, 0.8).unwrap();
        for s in [-1.5, 0.0, 2.0] {
            for convention in WeightConvention::all() {
                let w = weight(&g, &x, &xi, s, 0, convention).unwrap();
                assert_relative_eq!(w, 1.0f64, epsilon = 1e-13);
            }
        }
        // Non-unit covector: value is (|ξ|²_g)^s.
        let xi = Covector::covector(x, 3.0, -1.0).unwrap();
        let n2 = 10.0f64;
        for convention in WeightConvention::all() {
            let w = weight(&g, &x, &xi, 1.5, 0, convention).unwrap();
            assert_relative_eq!(w, n2.powf(1.5), max_relative = 1e-12);
        }
    }

    #[test]
    fn fitted_rates_match_predictions_at_s_one() {
        let g = torus_sine();
        let fps = find_fixed_points(&g, 12, 1e-12).unwrap();
        let x = SurfacePoint::new(0, 0.3, 0.2);
        let lim = limit_points(&g, &fps, &x, 1e-9, 100_000).unwrap();
        let rates = predicted_rates(&fps[lim.plus], &fps[lim.minus], 1.0);
        assert_relative_eq!(rates.forward_generic, 1.5, max_relative = 1e-9);
        assert_relative_eq!(rates.forward_exceptional, 2.0 / 3.0, max_relative = 1e-9);

        let generic = Covector::covector(x, 0.0, 1.0).unwrap();
        let series =
            weight_series(&g, &x, &generic, 1.0, -200, 200, WeightConvention::T1Pinned).unwrap();
        assert!(series.fit.reliable_plus);
        assert!(
            (series.fit.theta_plus - (1.5f64).ln()).abs() < 0.02,
            "generic forward rate {} vs {}",
            series.fit.theta_plus,
            (1.5f64).ln()
        );

        let exceptional = Covector::covector(x, 1.0, 0.0).unwrap();
        let series = weight_series(
            &g,
            &x,
            &exceptional,
            1.0,
            -200,
            200,
            WeightConvention::T1Pinned,
        )
        .unwrap();
        assert!(
            (series.fit.theta_plus - (2.0f64 / 3.0).ln()).abs() < 0.02,
            "exceptional forward rate {}",
            series.fit.theta_plus
        );
    }

    #[test]
    fn backward_rate_at_s_zero_is_log_det_at_source() {
        let g = torus_sine();
        let x = SurfacePoint::new(0, 0.3, 0.2);
        let xi = Covector::covector(x, 0.0, 1.0).unwrap();
        let series =
            weight_series(&g, &x, &xi, 0.0, -200, 200, WeightConvention::T1Pinned).unwrap();
        let expected = -(8.0f64 / 15.0).ln(); // ≈ +0.62861
        assert!(
            (series.fit.theta_minus - expected).abs() < 0.02,
            "theta_minus {} vs {}",
            series.fit.theta_minus,
            expected
        );
    }

    #[test]
    fn predicted_rate_examples() {
        let g = torus_sine();
        let fps = find_fixed_points(&g, 12, 1e-12).unwrap();
        let sink = fps
            .iter()
            .find(|fp| g.surface().distance(&fp.point, &SurfacePoint::new(0, 0.5, 0.5)) < 1e-8)
            .unwrap();
        let source = fps
            .iter()
            .find(|fp| g.surface().distance(&fp.point, &SurfacePoint::new(0, 0.0, 0.0)) < 1e-8)
            .unwrap();
        // At s = 0 every branch is |det ∂g|.
        let r0 = predicted_rates(sink, source, 0.0);
        assert_relative_eq!(r0.forward_generic, 8.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(r0.forward_exceptional, 8.0 / 3.0, max_relative = 1e-10);
        assert_relative_eq!(r0.backward_generic, 8.0 / 15.0, max_relative = 1e-10);
        // Source branches at s = -1: det·λ².
        let rm1 = predicted_rates(sink, source, -1.0);
        assert_relative_eq!(
            rm1.backward_generic,
            (8.0 / 15.0) * (4.0f64 / 5.0).powi(2),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            rm1.backward_exceptional,
            (8.0 / 15.0) * (2.0f64 / 3.0).powi(2),
            max_relative = 1e-10
        );
    }

    #[test]
    fn invariant_direction_is_the_x_axis() {
        let g = torus_sine();
        let fps = find_fixed_points(&g, 12, 1e-12).unwrap();
        let x = SurfacePoint::new(0, 0.3, 0.2);
        for end in [End::Plus, End::Minus] {
            let e = invariant_direction(&g, &fps, &x, end).unwrap();
            assert!(
                e.direction.x.abs() > 1.0 - 1e-10 && e.direction.y.abs() < 1e-10,
                "direction {:?} at {end:?}",
                e.direction
            );
        }
    }

    #[test]
    fn invariant_direction_is_equivariant() {
        let g = torus_sine();
        let fps = find_fixed_points(&g, 12, 1e-12).unwrap();
        let x = SurfacePoint::new(0, 0.3, 0.2);
        let ex = invariant_direction(&g, &fps, &x, End::Plus).unwrap();
        let gx = g.apply(&x, Direction::Forward).unwrap();
        let egx = invariant_direction(&g, &fps, &gx, End::Plus).unwrap();
        let pushed = jacobian(&g, &x).unwrap() * ex.direction;
        let angle = line_angle(&(pushed / pushed.norm()), &egx.direction);
        assert!(angle < 1e-6, "angle {angle}");
    }

    #[test]
    fn slightly_rotated_covector_recovers_generic_branch() {
        let g = torus_sine();
        let x = SurfacePoint::new(0, 0.3, 0.2);
        // Angle 1e-3 away from the exceptional direction: generic branch.
        let eps = 1e-3f64;
        let xi = Covector::covector(x, eps.cos(), eps.sin()).unwrap();
        let series =
            weight_series(&g, &x, &xi, 1.0, -200, 200, WeightConvention::T1Pinned).unwrap();
        let generic = (1.5f64).ln();
        assert!(
            (series.fit.theta_plus - generic).abs() < 0.02,
            "theta {} vs generic {}",
            series.fit.theta_plus,
            generic
        );
        // Exactly on the exceptional line: exceptional branch.
        let xi = Covector::covector(x, 1.0, 0.0).unwrap();
        let series =
            weight_series(&g, &x, &xi, 1.0, -200, 200, WeightConvention::T1Pinned).unwrap();
        assert!((series.fit.theta_plus - (2.0f64 / 3.0).ln()).abs() < 0.02);
    }
}
