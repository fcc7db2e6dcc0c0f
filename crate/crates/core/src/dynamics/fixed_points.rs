//! Fixed-point finding, classification, periodic scans and orbit limits.

use nalgebra::{Matrix2, Vector2};

use super::{inverse_transpose, Diffeo, Direction, DynamicsError};
use crate::geometry::{torus_diff, SurfacePoint};

/// Eigenvalue admissibility of a fixed point: the differential must have
/// real, positive, distinct eigenvalues different from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Def1Check {
    pub ok: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointKind {
    Source,
    Sink,
    Saddle,
}

impl FixedPointKind {
    pub fn label(self) -> &'static str {
        match self {
            FixedPointKind::Source => "source",
            FixedPointKind::Sink => "sink",
            FixedPointKind::Saddle => "saddle",
        }
    }
}

/// A classified fixed point.
///
/// `alpha` are the eigenvalues of the differential `dg` (ascending), with
/// matching unit eigendirections; `lambda` are the eigenvalues of the
/// codifferential `∂g` as `(λ_min, λ_max)`, computed from the codifferential
/// matrix itself rather than inverted from `alpha`.
#[derive(Debug, Clone)]
pub struct FixedPointRecord {
    pub point: SurfacePoint,
    pub dg: Matrix2<f64>,
    pub alpha: (f64, f64),
    pub alpha_dirs: (Vector2<f64>, Vector2<f64>),
    pub codifferential: Matrix2<f64>,
    pub lambda: (f64, f64),
    pub det_codifferential: f64,
    pub kind: FixedPointKind,
    pub def1: Def1Check,
    pub residual: f64,
}

impl FixedPointRecord {
    pub fn lambda_min(&self) -> f64 {
        self.lambda.0
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.1
    }

    /// Eigendirection of `dg` for the smaller eigenvalue `α_min`.
    pub fn alpha_min_dir(&self) -> Vector2<f64> {
        self.alpha_dirs.0
    }

    /// Eigendirection of `dg` for the larger eigenvalue `α_max`.
    pub fn alpha_max_dir(&self) -> Vector2<f64> {
        self.alpha_dirs.1
    }
}

struct Eigen2 {
    complex: bool,
    values: (f64, f64),
    dirs: (Vector2<f64>, Vector2<f64>),
}

/// Real eigen-decomposition of a 2x2 matrix via trace and determinant.
/// A complex pair is reported with both slots holding the common modulus.
fn eig2(m: &Matrix2<f64>) -> Eigen2 {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m.determinant();
    let disc = tr * tr / 4.0 - det;
    let tol = 1e-8 * (tr * tr).max(1.0);
    if disc < -tol {
        let modulus = det.abs().sqrt();
        return Eigen2 {
            complex: true,
            values: (modulus, modulus),
            dirs: (Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)),
        };
    }
    let root = disc.max(0.0).sqrt();
    let a1 = tr / 2.0 - root;
    let a2 = tr / 2.0 + root;
    Eigen2 {
        complex: false,
        values: (a1, a2),
        dirs: (eigvec2(m, a1), eigvec2(m, a2)),
    }
}

fn eigvec2(m: &Matrix2<f64>, alpha: f64) -> Vector2<f64> {
    // Null vector of m - alpha I; pick the better-conditioned row.
    let c1 = Vector2::new(m[(0, 1)], alpha - m[(0, 0)]);
    let c2 = Vector2::new(alpha - m[(1, 1)], m[(1, 0)]);
    let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
    if v.norm() < 1e-14 {
        // m is (numerically) a multiple of the identity.
        Vector2::new(1.0, 0.0)
    } else {
        v / v.norm()
    }
}

const UNIT_EIGEN_TOL: f64 = 1e-8;

fn classify(d: &dyn Diffeo, point: SurfacePoint, residual: f64) -> Result<FixedPointRecord, DynamicsError> {
    let dg = super::jacobian(d, &point)?;
    let eig = eig2(&dg);
    let mut reasons = Vec::new();
    if eig.complex {
        reasons.push("complex eigenvalues".to_string());
    } else {
        if eig.values.0 <= 0.0 || eig.values.1 <= 0.0 {
            reasons.push("nonpositive eigenvalue".to_string());
        }
        let scale = eig.values.1.abs().max(1.0);
        if (eig.values.1 - eig.values.0).abs() <= UNIT_EIGEN_TOL * scale {
            reasons.push("repeated eigenvalues".to_string());
        }
    }
    for a in [eig.values.0, eig.values.1] {
        if (a - 1.0).abs() <= UNIT_EIGEN_TOL {
            reasons.push(format!("eigenvalue {a} within tolerance of 1"));
            break;
        }
    }
    let codifferential = inverse_transpose(&dg)
        .ok_or(DynamicsError::SingularJacobian { cond: f64::INFINITY })?;
    let ceig = eig2(&codifferential);
    let lambda = (ceig.values.0.min(ceig.values.1), ceig.values.0.max(ceig.values.1));
    let (m1, m2) = (eig.values.0.abs(), eig.values.1.abs());
    let kind = if m1 > 1.0 && m2 > 1.0 {
        FixedPointKind::Source
    } else if m1 < 1.0 && m2 < 1.0 {
        FixedPointKind::Sink
    } else {
        FixedPointKind::Saddle
    };
    Ok(FixedPointRecord {
        point,
        dg,
        alpha: eig.values,
        alpha_dirs: eig.dirs,
        codifferential,
        lambda,
        det_codifferential: codifferential.determinant(),
        kind,
        def1: Def1Check {
            ok: reasons.is_empty(),
            reasons,
        },
        residual,
    })
}

/// `g^power(y)` together with the chain-rule Jacobian, both expressed in the
/// chart of `y` (the image is transitioned back; seeds whose images are not
/// representable there are rejected).
fn map_power_in_chart(
    d: &dyn Diffeo,
    y: &SurfacePoint,
    power: usize,
) -> Result<(Vector2<f64>, Matrix2<f64>), DynamicsError> {
    let mut p = *y;
    let mut jac = Matrix2::identity();
    for _ in 0..power {
        let (q, j) = d.step_jacobian(&p, Direction::Forward)?;
        jac = j * jac;
        p = q;
    }
    if p.chart != y.chart {
        let c = d.surface().transition_jacobian(&p, y.chart)?;
        let moved = d.surface().transition(&p, y.chart)?;
        return Ok((moved.coords, c * jac));
    }
    Ok((p.coords, jac))
}

fn chart_residual(d: &dyn Diffeo, image: Vector2<f64>, y: &SurfacePoint) -> Vector2<f64> {
    if d.surface().name() == "torus" {
        torus_diff(image, y.coords)
    } else {
        image - y.coords
    }
}

/// Damped Newton iteration for a root of `g^power(y) - y` from one seed.
/// Divergent seeds return `None`.
fn newton_root(
    d: &dyn Diffeo,
    seed: SurfacePoint,
    power: usize,
    tol: f64,
) -> Option<(SurfacePoint, f64)> {
    let mut y = seed;
    let eval = |y: &SurfacePoint| -> Option<(Vector2<f64>, Matrix2<f64>)> {
        let (image, jac) = map_power_in_chart(d, y, power).ok()?;
        Some((chart_residual(d, image, y), jac))
    };
    let (mut r, mut jac) = eval(&y)?;
    for _ in 0..50 {
        if r.norm() < tol {
            return Some((y, r.norm()));
        }
        let step = (jac - Matrix2::identity()).try_inverse()? * r;
        if !step.x.is_finite() || !step.y.is_finite() {
            return None;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand_coords = y.coords - lambda * step;
            let (cand, _) = d.surface().canonicalize(y.chart, cand_coords);
            if let Some((rc, jc)) = eval(&cand) {
                if rc.norm() < r.norm() {
                    y = cand;
                    r = rc;
                    jac = jc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if r.norm() < tol {
        Some((y, r.norm()))
    } else {
        None
    }
}

fn seed_grid(d: &dyn Diffeo, grid_n: usize) -> Vec<SurfacePoint> {
    let mut seeds = Vec::new();
    let charts = d.surface().chart_count();
    for chart in 0..charts {
        let (lo, hi) = if d.surface().name() == "torus" {
            (0.0, 1.0)
        } else {
            (-1.3, 1.3)
        };
        let h = (hi - lo) / grid_n as f64;
        for i in 0..grid_n {
            for j in 0..grid_n {
                // Half-cell offset avoids symmetric degeneracies of the maps.
                let x = lo + (i as f64 + 0.5) * h;
                let y = lo + (j as f64 + 0.5) * h;
                seeds.push(SurfacePoint::new(chart, x, y));
            }
        }
    }
    seeds
}

const DEDUP_RADIUS: f64 = 1e-6;

fn roots_of_power(
    d: &dyn Diffeo,
    power: usize,
    grid_n: usize,
    tol: f64,
) -> (Vec<(SurfacePoint, f64)>, usize) {
    let seeds = seed_grid(d, grid_n);
    let seed_count = seeds.len();
    let mut roots: Vec<(SurfacePoint, f64)> = Vec::new();
    for seed in seeds {
        if let Some((root, residual)) = newton_root(d, seed, power, tol) {
            match roots
                .iter_mut()
                .find(|(r, _)| d.surface().distance(r, &root) < DEDUP_RADIUS)
            {
                Some(existing) => {
                    if residual < existing.1 {
                        *existing = (root, residual);
                    }
                }
                None => roots.push((root, residual)),
            }
        }
    }
    roots.sort_by(|a, b| {
        (a.0.chart, a.0.coords.x, a.0.coords.y)
            .partial_cmp(&(b.0.chart, b.0.coords.x, b.0.coords.y))
            .unwrap()
    });
    (roots, seed_count)
}

/// Newton search for the fixed points of `g`, seeded from a per-chart grid.
/// Roots failing the eigenvalue admissibility conditions are flagged in
/// their record, not dropped.
pub fn find_fixed_points(
    d: &dyn Diffeo,
    grid_n: usize,
    tol: f64,
) -> Result<Vec<FixedPointRecord>, DynamicsError> {
    if grid_n < 8 {
        return Err(DynamicsError::Unsupported(
            "fixed-point grid must be at least 8x8".into(),
        ));
    }
    let (roots, _) = roots_of_power(d, 1, grid_n, tol);
    roots
        .into_iter()
        .map(|(point, residual)| classify(d, point, residual))
        .collect()
}

#[derive(Debug, Clone)]
pub struct PeriodicViolation {
    pub period: usize,
    pub point: SurfacePoint,
    pub distance_to_fixed_set: f64,
}

#[derive(Debug, Clone)]
pub struct PeriodicScanReport {
    pub max_period: usize,
    pub violations: Vec<PeriodicViolation>,
    pub notes: Vec<String>,
}

/// Scan for genuine periodic points: every root of `g^p` (p = 2..max) must
/// lie on the fixed-point set.
pub fn scan_periodic(
    d: &dyn Diffeo,
    fixed_points: &[FixedPointRecord],
    max_period: usize,
    grid_n: usize,
) -> Result<PeriodicScanReport, DynamicsError> {
    if max_period < 2 {
        return Err(DynamicsError::Unsupported(
            "periodic scan needs max_period >= 2".into(),
        ));
    }
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    for period in 2..=max_period {
        let (roots, seed_count) = roots_of_power(d, period, grid_n, 1e-12);
        if roots.len() * 2 >= seed_count {
            notes.push(format!(
                "the {period}-fold iterate fixes about every seed; the fixed-point set does not look finite"
            ));
        }
        for (root, _) in roots {
            let dist = fixed_points
                .iter()
                .map(|fp| d.surface().distance(&fp.point, &root))
                .fold(f64::INFINITY, f64::min);
            if dist > DEDUP_RADIUS
                && !violations.iter().any(|v: &PeriodicViolation| {
                    d.surface().distance(&v.point, &root) < DEDUP_RADIUS
                })
            {
                violations.push(PeriodicViolation {
                    period,
                    point: root,
                    distance_to_fixed_set: dist,
                });
            }
        }
    }
    Ok(PeriodicScanReport {
        max_period,
        violations,
        notes,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitLimit {
    /// Index into the fixed-point list of the forward limit.
    pub plus: usize,
    /// Index into the fixed-point list of the backward limit.
    pub minus: usize,
    pub iterations_plus: usize,
    pub iterations_minus: usize,
}

/// Iterate both ways until the orbit sits within `tol` of one fixed point
/// for ten consecutive steps.
pub fn limit_points(
    d: &dyn Diffeo,
    fixed_points: &[FixedPointRecord],
    x: &SurfacePoint,
    tol: f64,
    max_iter: usize,
) -> Result<OrbitLimit, DynamicsError> {
    let limit_one = |dir: Direction| -> Result<(usize, usize), DynamicsError> {
        let mut p = *x;
        let mut run_idx = usize::MAX;
        let mut run_len = 0usize;
        for it in 0..max_iter {
            let (idx, dist) = fixed_points
                .iter()
                .enumerate()
                .map(|(i, fp)| (i, d.surface().distance(&fp.point, &p)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .ok_or_else(|| DynamicsError::Unsupported("empty fixed-point list".into()))?;
            if dist < tol {
                if idx == run_idx {
                    run_len += 1;
                } else {
                    run_idx = idx;
                    run_len = 1;
                }
                if run_len >= 10 {
                    return Ok((idx, it));
                }
            } else {
                run_len = 0;
            }
            p = d.apply(&p, dir)?;
        }
        Err(DynamicsError::OrbitNonConvergence { max_iter })
    };
    let (plus, iterations_plus) = limit_one(Direction::Forward)?;
    let (minus, iterations_minus) = limit_one(Direction::Backward)?;
    Ok(OrbitLimit {
        plus,
        minus,
        iterations_plus,
        iterations_minus,
    })
}

#[derive(Debug, Clone)]
pub struct MorseSmaleReport {
    pub fixed_points: Vec<FixedPointRecord>,
    pub periodic: PeriodicScanReport,
    pub fixed_set_finite: bool,
    pub def1_ok: bool,
    pub passed: bool,
}

/// Run the full admissibility check: classify all fixed points, verify the
/// eigenvalue conditions at each, and scan for periodic points.
pub fn validate_morse_smale(
    d: &dyn Diffeo,
    grid_n: usize,
    max_period: usize,
) -> Result<MorseSmaleReport, DynamicsError> {
    let fixed_points = find_fixed_points(d, grid_n, 1e-12)?;
    let seed_count = grid_n * grid_n * d.surface().chart_count();
    let fixed_set_finite = fixed_points.len() * 2 < seed_count;
    let def1_ok = !fixed_points.is_empty() && fixed_points.iter().all(|fp| fp.def1.ok);
    let periodic = scan_periodic(d, &fixed_points, max_period, grid_n)?;
    let passed = def1_ok && fixed_set_finite && periodic.violations.is_empty();
    Ok(MorseSmaleReport {
        fixed_points,
        periodic,
        fixed_set_finite,
        def1_ok,
        passed,
    })
}
