//! Diffeomorphisms of the built-in surfaces and the orbit machinery built
//! on them: Jacobians, codifferentials, matrix cocycles along orbits,
//! fixed-point finding and classification, periodic-point scans and orbit
//! limits.
//!
//! Map realizations live behind the [`Diffeo`] trait so that closed-form
//! maps and time-one flow maps are interchangeable strategies; concrete
//! implementations register by name in [`crate::registry`].

mod closed_form;
mod fixed_points;
mod flow;

pub use closed_form::ClosedFormMap;
pub use fixed_points::{
    find_fixed_points, limit_points, scan_periodic, validate_morse_smale, Def1Check,
    FixedPointKind, FixedPointRecord, MorseSmaleReport, OrbitLimit, PeriodicScanReport,
    PeriodicViolation,
};
pub use flow::FlowTimeOneMap;

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::expr::EvalError;
use crate::geometry::{GeometryError, Surface, SurfacePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn reverse(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dynamics: {0}")]
    Geometry(#[from] GeometryError),
    #[error("dynamics: {0}")]
    Expr(#[from] EvalError),
    #[error("dynamics: Newton inversion did not converge (residual {residual:.3e})")]
    NewtonInversion { residual: f64 },
    #[error("dynamics: Jacobian is numerically singular (condition {cond:.3e})")]
    SingularJacobian { cond: f64 },
    #[error("dynamics: orbit did not converge within {max_iter} iterations")]
    OrbitNonConvergence { max_iter: usize },
    #[error("dynamics: invariant direction iteration did not settle within {max_n} steps")]
    DirectionNonConvergence { max_n: usize },
    #[error("dynamics: {0}")]
    Unsupported(String),
}

/// A diffeomorphism of a surface.
///
/// `step_jacobian` returns both the image point (canonicalized) and the
/// chart-to-chart Jacobian of the step, including any chart-transition
/// factor picked up by canonicalization. All cocycles are products of these
/// per-step matrices, so chart changes conjugate consistently.
pub trait Diffeo: Send + Sync {
    fn surface(&self) -> &Arc<dyn Surface>;

    fn apply(&self, p: &SurfacePoint, dir: Direction) -> Result<SurfacePoint, DynamicsError>;

    fn step_jacobian(
        &self,
        p: &SurfacePoint,
        dir: Direction,
    ) -> Result<(SurfacePoint, Matrix2<f64>), DynamicsError>;

    fn describe(&self) -> String;
}

/// Forward-map Jacobian in chart coordinates.
pub fn jacobian(d: &dyn Diffeo, p: &SurfacePoint) -> Result<Matrix2<f64>, DynamicsError> {
    Ok(d.step_jacobian(p, Direction::Forward)?.1)
}

/// Codifferential `((dg)ᵗ)⁻¹` at a point.
pub fn codifferential(d: &dyn Diffeo, p: &SurfacePoint) -> Result<Matrix2<f64>, DynamicsError> {
    let jac = jacobian(d, p)?;
    let cond = condition_2x2(&jac);
    if !cond.is_finite() || cond > 1e12 {
        return Err(DynamicsError::SingularJacobian { cond });
    }
    inverse_transpose(&jac).ok_or(DynamicsError::SingularJacobian { cond })
}

pub fn inverse_transpose(m: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    m.transpose().try_inverse()
}

/// 2-norm condition number of a 2x2 matrix via the singular values of `mᵀm`.
pub fn condition_2x2(m: &Matrix2<f64>) -> f64 {
    let g = m.transpose() * m;
    let tr = g[(0, 0)] + g[(1, 1)];
    let det = g.determinant().max(0.0);
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let hi = tr / 2.0 + disc;
    let lo = (tr / 2.0 - disc).max(0.0);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CocycleKind {
    /// Products of differentials `dg`.
    Differential,
    /// Products of codifferentials `∂g = ((dg)ᵗ)⁻¹`.
    Codifferential,
}

/// Walks an orbit while accumulating both matrix cocycles in scaled form.
///
/// The running matrices are renormalized whenever their largest entry
/// leaves `[1e-120, 1e120]`; the discarded magnitude is tracked as a log
/// scale so long orbits neither overflow nor underflow.
pub struct OrbitWalker<'a> {
    diffeo: &'a dyn Diffeo,
    dir: Direction,
    pub point: SurfacePoint,
    m_dg: Matrix2<f64>,
    m_codg: Matrix2<f64>,
    log_scale_dg: f64,
    log_scale_codg: f64,
    /// Accumulated `Σ ln |det dg|` along the walked steps (signed steps:
    /// backward walks accumulate the backward-step Jacobians).
    pub log_abs_det_dg: f64,
    pub steps: usize,
}

impl<'a> OrbitWalker<'a> {
    pub fn new(diffeo: &'a dyn Diffeo, start: SurfacePoint, dir: Direction) -> Self {
        OrbitWalker {
            diffeo,
            dir,
            point: start,
            m_dg: Matrix2::identity(),
            m_codg: Matrix2::identity(),
            log_scale_dg: 0.0,
            log_scale_codg: 0.0,
            log_abs_det_dg: 0.0,
            steps: 0,
        }
    }

    pub fn step(&mut self) -> Result<(), DynamicsError> {
        let (next, jac) = self.diffeo.step_jacobian(&self.point, self.dir)?;
        let det = jac.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(DynamicsError::SingularJacobian { cond: f64::INFINITY });
        }
        let codg = inverse_transpose(&jac)
            .ok_or(DynamicsError::SingularJacobian { cond: f64::INFINITY })?;
        self.m_dg = jac * self.m_dg;
        self.m_codg = codg * self.m_codg;
        self.log_abs_det_dg += det.abs().ln();
        self.point = next;
        self.steps += 1;
        rescale(&mut self.m_dg, &mut self.log_scale_dg);
        rescale(&mut self.m_codg, &mut self.log_scale_codg);
        Ok(())
    }

    /// Scaled differential cocycle: true matrix is `m * exp(log_scale)`.
    pub fn dg_scaled(&self) -> (Matrix2<f64>, f64) {
        (self.m_dg, self.log_scale_dg)
    }

    pub fn codg_scaled(&self) -> (Matrix2<f64>, f64) {
        (self.m_codg, self.log_scale_codg)
    }
}

fn rescale(m: &mut Matrix2<f64>, log_scale: &mut f64) {
    let a = m.amax();
    if a > 1e120 || (a < 1e-120 && a > 0.0) {
        *m /= a;
        *log_scale += a.ln();
    }
}

/// Ordered product of per-step Jacobians (or codifferentials) along the
/// orbit of `x`; `n < 0` walks the inverse map. May overflow for very long
/// expanding orbits; the weight computations use the scaled walker instead.
pub fn cocycle(
    d: &dyn Diffeo,
    x: &SurfacePoint,
    n: i64,
    kind: CocycleKind,
) -> Result<Matrix2<f64>, DynamicsError> {
    let dir = if n >= 0 {
        Direction::Forward
    } else {
        Direction::Backward
    };
    let mut w = OrbitWalker::new(d, *x, dir);
    for _ in 0..n.unsigned_abs() {
        w.step()?;
    }
    let (m, s) = match kind {
        CocycleKind::Differential => w.dg_scaled(),
        CocycleKind::Codifferential => w.codg_scaled(),
    };
    Ok(m * s.exp())
}

/// Central-difference Jacobian of a raw chart map. Step size
/// `max(1e-6, 1e-6 |coordinate|)` per coordinate.
pub fn fd_jacobian<F>(raw: F, v: Vector2<f64>) -> Result<Matrix2<f64>, DynamicsError>
where
    F: Fn(Vector2<f64>) -> Result<Vector2<f64>, DynamicsError>,
{
    let mut out = Matrix2::zeros();
    for j in 0..2 {
        let h = 1e-6_f64.max(1e-6 * v[j].abs());
        let mut vp = v;
        let mut vm = v;
        vp[j] += h;
        vm[j] -= h;
        let fp = raw(vp)?;
        let fm = raw(vm)?;
        let col = (fp - fm) / (2.0 * h);
        out[(0, j)] = col[0];
        out[(1, j)] = col[1];
    }
    Ok(out)
}
