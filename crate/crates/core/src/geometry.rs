//! Surfaces as chart atlases with Riemannian data.
//!
//! Two built-in surfaces cover everything the analyses need: the flat torus
//! `R²/Z²` with one periodic chart, and the unit round sphere with two
//! stereographic charts (projection from the north pole and from the south
//! pole). Each surface provides chart transitions, the cometric norm (the
//! principal symbol of the Laplacian), the smooth area measure, and covector
//! and tangent transport across charts.
//!
//! Conventions for the sphere: chart 0 projects from the north pole (its
//! origin is the south pole), chart 1 projects from the south pole. The
//! transition on the overlap is the inversion `w = v / |v|²`, singular
//! exactly at the chart origin. The round metric in either chart is the
//! conformal factor `4 / (1 + |v|²)²` times the Euclidean metric, so the
//! cometric norm of a covector is `((1 + |v|²)² / 4)·|ξ|²` and the area
//! density is `4 / (1 + |v|²)²`.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

/// Transformation law of an indexed quantity on chart changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    /// Components transform with the inverse-transpose transition Jacobian.
    Covector,
    /// Components transform with the transition Jacobian.
    Tangent,
}

#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub chart: usize,
    pub coords: Vector2<f64>,
}

impl SurfacePoint {
    pub fn new(chart: usize, x: f64, y: f64) -> Self {
        SurfacePoint {
            chart,
            coords: Vector2::new(x, y),
        }
    }
}

/// A covector (or, via the variance flag, a tangent vector) anchored at a
/// base point and expressed in that point's chart.
#[derive(Debug, Clone, Copy)]
pub struct Covector {
    pub point: SurfacePoint,
    pub components: Vector2<f64>,
    pub variance: Variance,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("geometry: chart {chart} does not exist on {surface}")]
    NoSuchChart { surface: &'static str, chart: usize },
    #[error("geometry: transition to chart {target} is singular at the projection pole")]
    PoleSingularity { target: usize },
    #[error("geometry: zero covector/tangent components")]
    ZeroComponents,
}

impl Covector {
    pub fn covector(point: SurfacePoint, c1: f64, c2: f64) -> Result<Self, GeometryError> {
        Self::with_variance(point, Vector2::new(c1, c2), Variance::Covector)
    }

    pub fn tangent(point: SurfacePoint, c1: f64, c2: f64) -> Result<Self, GeometryError> {
        Self::with_variance(point, Vector2::new(c1, c2), Variance::Tangent)
    }

    pub fn with_variance(
        point: SurfacePoint,
        components: Vector2<f64>,
        variance: Variance,
    ) -> Result<Self, GeometryError> {
        if components.norm() == 0.0 {
            return Err(GeometryError::ZeroComponents);
        }
        Ok(Covector {
            point,
            components,
            variance,
        })
    }
}

pub trait Surface: Send + Sync {
    fn name(&self) -> &'static str;

    fn chart_count(&self) -> usize;

    /// Bring raw chart coordinates into canonical form (wrap torus
    /// coordinates into `[0,1)²`, re-chart sphere points with `|v| > 1.5`).
    /// Also returns the Jacobian of the adjustment so differentials can be
    /// pushed along.
    fn canonicalize(&self, chart: usize, coords: Vector2<f64>) -> (SurfacePoint, Matrix2<f64>);

    fn transition(
        &self,
        p: &SurfacePoint,
        target: usize,
    ) -> Result<SurfacePoint, GeometryError>;

    fn transition_jacobian(
        &self,
        p: &SurfacePoint,
        target: usize,
    ) -> Result<Matrix2<f64>, GeometryError>;

    /// `|ξ|²_g` via the cometric; the principal symbol of the Laplacian.
    fn cometric_norm2(&self, xi: &Covector) -> f64;

    /// `‖v‖²_g` for tangent-variance carriers.
    fn tangent_norm2(&self, v: &Covector) -> f64;

    /// Density of the smooth measure relative to chart Lebesgue measure.
    fn area_density(&self, p: &SurfacePoint) -> f64;

    /// Chart-independent distance (wrapped on the torus, chordal in the
    /// ambient embedding on the sphere).
    fn distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> f64;

    /// Musical index raising: covector to tangent via the cometric.
    fn raise(&self, xi: &Covector) -> Covector;

    /// Musical index lowering: tangent to covector via the metric.
    fn lower(&self, v: &Covector) -> Covector;

    /// Transport to another chart, honoring the variance flag.
    fn transport(&self, c: &Covector, target: usize) -> Result<Covector, GeometryError> {
        if c.point.chart == target {
            return Ok(*c);
        }
        let jac = self.transition_jacobian(&c.point, target)?;
        let point = self.transition(&c.point, target)?;
        let components = transform_components(&jac, c.components, c.variance);
        Ok(Covector {
            point,
            components,
            variance: c.variance,
        })
    }
}

/// Apply the chart-change law for the given variance: tangents push forward
/// with the Jacobian, covectors with its inverse transpose.
pub fn transform_components(
    jac: &Matrix2<f64>,
    components: Vector2<f64>,
    variance: Variance,
) -> Vector2<f64> {
    match variance {
        Variance::Tangent => jac * components,
        Variance::Covector => {
            let inv = jac.try_inverse().expect("transition Jacobian invertible");
            inv.transpose() * components
        }
    }
}

// ---------------------------------------------------------------------------
// Flat torus
// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
pub struct Torus;

impl Torus {
    pub fn shared() -> Arc<dyn Surface> {
        Arc::new(Torus)
    }
}

fn wrap01(x: f64) -> f64 {
    let w = x - x.floor();
    // x.floor() of e.g. -1e-18 yields w == 1.0; fold that back.
    if w >= 1.0 {
        w - 1.0
    } else {
        w
    }
}

/// Wrapped difference in `(-1/2, 1/2]` per coordinate.
pub fn torus_diff(a: Vector2<f64>, b: Vector2<f64>) -> Vector2<f64> {
    let d = |x: f64| {
        let mut d = x - x.round();
        if d <= -0.5 {
            d += 1.0;
        }
        d
    };
    Vector2::new(d(a.x - b.x), d(a.y - b.y))
}

impl Surface for Torus {
    fn name(&self) -> &'static str {
        "torus"
    }

    fn chart_count(&self) -> usize {
        1
    }

    fn canonicalize(&self, _chart: usize, coords: Vector2<f64>) -> (SurfacePoint, Matrix2<f64>) {
        (
            SurfacePoint {
                chart: 0,
                coords: Vector2::new(wrap01(coords.x), wrap01(coords.y)),
            },
            Matrix2::identity(),
        )
    }

    fn transition(&self, p: &SurfacePoint, target: usize) -> Result<SurfacePoint, GeometryError> {
        if target != 0 {
            return Err(GeometryError::NoSuchChart {
                surface: "torus",
                chart: target,
            });
        }
        Ok(*p)
    }

    fn transition_jacobian(
        &self,
        _p: &SurfacePoint,
        target: usize,
    ) -> Result<Matrix2<f64>, GeometryError> {
        if target != 0 {
            return Err(GeometryError::NoSuchChart {
                surface: "torus",
                chart: target,
            });
        }
        Ok(Matrix2::identity())
    }

    fn cometric_norm2(&self, xi: &Covector) -> f64 {
        xi.components.norm_squared()
    }

    fn tangent_norm2(&self, v: &Covector) -> f64 {
        v.components.norm_squared()
    }

    fn area_density(&self, _p: &SurfacePoint) -> f64 {
        1.0
    }

    fn distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
        torus_diff(p.coords, q.coords).norm()
    }

    fn raise(&self, xi: &Covector) -> Covector {
        Covector {
            variance: Variance::Tangent,
            ..*xi
        }
    }

    fn lower(&self, v: &Covector) -> Covector {
        Covector {
            variance: Variance::Covector,
            ..*v
        }
    }
}

// ---------------------------------------------------------------------------
// Round sphere
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct Sphere {
    /// Chart coordinates beyond this radius are re-expressed in the other
    /// chart; 1.5 balances the conditioning of both charts.
    pub recenter_radius: f64,
}

impl Default for Sphere {
    fn default() -> Self {
        Sphere {
            recenter_radius: 1.5,
        }
    }
}

impl Sphere {
    pub fn shared() -> Arc<dyn Surface> {
        Arc::new(Sphere::default())
    }

    /// Conformal factor of the round metric in stereographic coordinates.
    pub fn conformal_factor(v: Vector2<f64>) -> f64 {
        let r2 = v.norm_squared();
        4.0 / ((1.0 + r2) * (1.0 + r2))
    }

    /// Ambient unit-sphere embedding of a chart point.
    pub fn embed(p: &SurfacePoint) -> [f64; 3] {
        let r2 = p.coords.norm_squared();
        let denom = 1.0 + r2;
        let x = 2.0 * p.coords.x / denom;
        let y = 2.0 * p.coords.y / denom;
        let z = (r2 - 1.0) / denom;
        match p.chart {
            0 => [x, y, z],
            _ => [x, y, -z],
        }
    }
}

impl Surface for Sphere {
    fn name(&self) -> &'static str {
        "sphere"
    }

    fn chart_count(&self) -> usize {
        2
    }

    fn canonicalize(&self, chart: usize, coords: Vector2<f64>) -> (SurfacePoint, Matrix2<f64>) {
        let p = SurfacePoint { chart, coords };
        if coords.norm() > self.recenter_radius {
            let target = 1 - chart;
            // |v| > 1.5 keeps the inversion well away from its pole.
            let jac = self
                .transition_jacobian(&p, target)
                .expect("re-chart away from origin");
            let q = self.transition(&p, target).expect("re-chart away from origin");
            (q, jac)
        } else {
            (p, Matrix2::identity())
        }
    }

    fn transition(&self, p: &SurfacePoint, target: usize) -> Result<SurfacePoint, GeometryError> {
        if target >= 2 {
            return Err(GeometryError::NoSuchChart {
                surface: "sphere",
                chart: target,
            });
        }
        if target == p.chart {
            return Ok(*p);
        }
        let r2 = p.coords.norm_squared();
        if r2 == 0.0 {
            // The chart origin is the other chart's projection pole.
            return Err(GeometryError::PoleSingularity { target });
        }
        Ok(SurfacePoint {
            chart: target,
            coords: p.coords / r2,
        })
    }

    fn transition_jacobian(
        &self,
        p: &SurfacePoint,
        target: usize,
    ) -> Result<Matrix2<f64>, GeometryError> {
        if target >= 2 {
            return Err(GeometryError::NoSuchChart {
                surface: "sphere",
                chart: target,
            });
        }
        if target == p.chart {
            return Ok(Matrix2::identity());
        }
        let v = p.coords;
        let r2 = v.norm_squared();
        if r2 == 0.0 {
            return Err(GeometryError::PoleSingularity { target });
        }
        // d(v/|v|²) = I/|v|² − 2 v vᵀ/|v|⁴
        let r4 = r2 * r2;
        Ok(Matrix2::new(
            1.0 / r2 - 2.0 * v.x * v.x / r4,
            -2.0 * v.x * v.y / r4,
            -2.0 * v.y * v.x / r4,
            1.0 / r2 - 2.0 * v.y * v.y / r4,
        ))
    }

    fn cometric_norm2(&self, xi: &Covector) -> f64 {
        xi.components.norm_squared() / Sphere::conformal_factor(xi.point.coords)
    }

    fn tangent_norm2(&self, v: &Covector) -> f64 {
        v.components.norm_squared() * Sphere::conformal_factor(v.point.coords)
    }

    fn area_density(&self, p: &SurfacePoint) -> f64 {
        Sphere::conformal_factor(p.coords)
    }

    fn distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
        let a = Sphere::embed(p);
        let b = Sphere::embed(q);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    fn raise(&self, xi: &Covector) -> Covector {
        let phi = Sphere::conformal_factor(xi.point.coords);
        Covector {
            point: xi.point,
            components: xi.components / phi,
            variance: Variance::Tangent,
        }
    }

    fn lower(&self, v: &Covector) -> Covector {
        let phi = Sphere::conformal_factor(v.point.coords);
        Covector {
            point: v.point,
            components: v.components * phi,
            variance: Variance::Covector,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn torus_canonicalizes_to_unit_square() {
        let t = Torus;
        let (p, _) = t.canonicalize(0, Vector2::new(1.3, -0.2));
        assert_relative_eq!(p.coords.x, 0.3, epsilon = 1e-12);
        assert_relative_eq!(p.coords.y, 0.8, epsilon = 1e-12);
        let (p, _) = t.canonicalize(0, Vector2::new(0.3, 0.2));
        assert_eq!((p.coords.x, p.coords.y), (0.3, 0.2));
    }

    #[test]
    fn torus_cometric_examples() {
        let t = Torus;
        let p = SurfacePoint::new(0, 0.1, 0.9);
        let xi = Covector::covector(p, 0.6, 0.8).unwrap();
        assert_relative_eq!(t.cometric_norm2(&xi), 1.0, epsilon = 1e-15);
        assert_eq!(t.area_density(&p), 1.0);
    }

    #[test]
    fn sphere_unit_circle_is_fixed_by_transition() {
        let s = Sphere::default();
        let p = SurfacePoint::new(0, 1.0, 0.0);
        let q = s.transition(&p, 1).unwrap();
        assert_eq!(q.chart, 1);
        assert_relative_eq!(q.coords.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(q.coords.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_pole_transition_is_singular() {
        let s = Sphere::default();
        let south_pole = SurfacePoint::new(0, 0.0, 0.0);
        let err = s.transition(&south_pole, 1).unwrap_err();
        assert!(matches!(err, GeometryError::PoleSingularity { target: 1 }));
        // Staying in the chart that contains the point is fine.
        assert!(s.transition(&south_pole, 0).is_ok());
    }

    #[test]
    fn sphere_transition_round_trip() {
        let s = Sphere::default();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let chart = rng.gen_range(0..2);
            let r = rng.gen_range(0.3..1.4);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = SurfacePoint::new(chart, r * th.cos(), r * th.sin());
            let q = s.transition(&p, 1 - chart).unwrap();
            let back = s.transition(&q, chart).unwrap();
            assert!((back.coords - p.coords).norm() < 1e-12);
        }
    }

    #[test]
    fn sphere_cometric_is_chart_independent() {
        let s = Sphere::default();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let chart = rng.gen_range(0..2);
            let r = rng.gen_range(0.3..1.4);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = SurfacePoint::new(chart, r * th.cos(), r * th.sin());
            let xi = Covector::covector(p, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let xi = match xi {
                Ok(c) => c,
                Err(_) => continue,
            };
            let n0 = s.cometric_norm2(&xi);
            let moved = s.transport(&xi, 1 - chart).unwrap();
            let n1 = s.cometric_norm2(&moved);
            assert_relative_eq!(n0, n1, max_relative = 1e-10);
            // Tangent norms transport consistently as well.
            let v = s.raise(&xi);
            let vmoved = s.transport(&v, 1 - chart).unwrap();
            assert_relative_eq!(
                s.tangent_norm2(&v),
                s.tangent_norm2(&vmoved),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn sphere_density_and_cometric_examples() {
        let s = Sphere::default();
        let origin = SurfacePoint::new(0, 0.0, 0.0);
        assert_relative_eq!(s.area_density(&origin), 4.0, epsilon = 1e-15);
        let at1 = SurfacePoint::new(0, 1.0, 0.0);
        assert_relative_eq!(s.area_density(&at1), 1.0, epsilon = 1e-15);
        let xi = Covector::covector(origin, 1.0, 0.0).unwrap();
        assert_relative_eq!(s.cometric_norm2(&xi), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn cometric_norm_is_homogeneous_of_degree_two() {
        let s = Sphere::default();
        let p = SurfacePoint::new(1, 0.4, -0.3);
        let xi = Covector::covector(p, 0.7, -1.1).unwrap();
        let base = s.cometric_norm2(&xi);
        for t in [2.0, 10.0] {
            let scaled = Covector::covector(p, 0.7 * t, -1.1 * t).unwrap();
            assert_relative_eq!(s.cometric_norm2(&scaled), t * t * base, max_relative = 1e-14);
        }
    }

    #[test]
    fn raise_lower_are_mutually_inverse_and_match_cometric() {
        let s = Sphere::default();
        let p = SurfacePoint::new(0, 0.8, 0.1);
        let xi = Covector::covector(p, 0.3, -0.9).unwrap();
        let v = s.raise(&xi);
        assert_eq!(v.variance, Variance::Tangent);
        // ‖ξ♯‖²_g = |ξ|²_{g⁻¹}
        assert_relative_eq!(s.tangent_norm2(&v), s.cometric_norm2(&xi), max_relative = 1e-14);
        let back = s.lower(&v);
        assert!((back.components - xi.components).norm() < 1e-14);
    }

    #[test]
    fn sphere_area_integrates_to_4pi() {
        // Midpoint rule over the |v| <= 1 disk in both charts.
        let s = Sphere::default();
        let n = 200;
        let h = 2.0 / n as f64;
        let mut total = 0.0;
        for chart in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    let x = -1.0 + (i as f64 + 0.5) * h;
                    let y = -1.0 + (j as f64 + 0.5) * h;
                    let v = Vector2::new(x, y);
                    if v.norm_squared() <= 1.0 {
                        total += s.area_density(&SurfacePoint { chart, coords: v }) * h * h;
                    }
                }
            }
        }
        let exact = 4.0 * std::f64::consts::PI;
        assert!(
            ((total - exact) / exact).abs() < 1e-3,
            "area {total} vs {exact}"
        );
    }

    #[test]
    fn canonicalize_recenters_far_points() {
        let s = Sphere::default();
        let (p, jac) = s.canonicalize(0, Vector2::new(2.0, 0.0));
        assert_eq!(p.chart, 1);
        assert_relative_eq!(p.coords.x, 0.5, epsilon = 1e-15);
        // Tangent pushed by the returned Jacobian keeps its metric norm.
        let v0 = Covector::tangent(SurfacePoint::new(0, 2.0, 0.0), 0.2, 0.7).unwrap();
        let pushed = Covector::with_variance(p, jac * v0.components, Variance::Tangent).unwrap();
        assert_relative_eq!(
            s.tangent_norm2(&v0),
            s.tangent_norm2(&pushed),
            max_relative = 1e-12
        );
    }
}
