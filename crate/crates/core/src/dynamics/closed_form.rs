//! Diffeomorphisms given by closed-form chart expressions.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use super::{fd_jacobian, Diffeo, Direction, DynamicsError};
use crate::expr::{self, Expr};
use crate::geometry::{torus_diff, Surface, SurfacePoint, Torus};

const MAP_VARS: [&str; 2] = ["x1", "x2"];

/// A map defined per chart by a pair of coordinate expressions, with an
/// optional closed-form inverse and optional analytic Jacobian entries.
/// Missing pieces fall back to Newton inversion and central differences.
pub struct ClosedFormMap {
    surface: Arc<dyn Surface>,
    forward: Vec<[Expr; 2]>,
    backward: Option<Vec<[Expr; 2]>>,
    jac: Option<Vec<[Expr; 4]>>,
    name: String,
}

impl ClosedFormMap {
    pub fn new(
        surface: Arc<dyn Surface>,
        forward: Vec<[Expr; 2]>,
        backward: Option<Vec<[Expr; 2]>>,
        jac: Option<Vec<[Expr; 4]>>,
        name: impl Into<String>,
    ) -> Result<Self, DynamicsError> {
        let charts = surface.chart_count();
        if forward.len() != charts
            || backward.as_ref().is_some_and(|b| b.len() != charts)
            || jac.as_ref().is_some_and(|j| j.len() != charts)
        {
            return Err(DynamicsError::Unsupported(format!(
                "closed-form map needs expressions for all {charts} chart(s)"
            )));
        }
        Ok(ClosedFormMap {
            surface,
            forward,
            backward,
            jac,
            name: name.into(),
        })
    }

    pub fn from_strings(
        surface: Arc<dyn Surface>,
        forward: &[[String; 2]],
        backward: Option<&[[String; 2]]>,
        jac: Option<&[[String; 4]]>,
        name: impl Into<String>,
    ) -> Result<Self, DynamicsError> {
        let parse_pair = |pair: &[String; 2]| -> Result<[Expr; 2], DynamicsError> {
            Ok([parse_map_expr(&pair[0])?, parse_map_expr(&pair[1])?])
        };
        let fwd = forward
            .iter()
            .map(parse_pair)
            .collect::<Result<Vec<_>, _>>()?;
        let bwd = backward
            .map(|b| b.iter().map(parse_pair).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        let jac = jac
            .map(|j| {
                j.iter()
                    .map(|quad| -> Result<[Expr; 4], DynamicsError> {
                        Ok([
                            parse_map_expr(&quad[0])?,
                            parse_map_expr(&quad[1])?,
                            parse_map_expr(&quad[2])?,
                            parse_map_expr(&quad[3])?,
                        ])
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        ClosedFormMap::new(surface, fwd, bwd, jac, name)
    }

    /// The canonical two-parameter torus test map
    /// `(x, y) ↦ (x + a sin(2πx)/(2π), y + b sin(2πy)/(2π)) mod 1`.
    pub fn torus_sine(a: f64, b: f64) -> Result<Self, DynamicsError> {
        let fwd = [[
            format!("x1 + {a:?}*sin(2*pi*x1)/(2*pi)"),
            format!("x2 + {b:?}*sin(2*pi*x2)/(2*pi)"),
        ]];
        let jac = [[
            format!("1 + {a:?}*cos(2*pi*x1)"),
            "0".to_string(),
            "0".to_string(),
            format!("1 + {b:?}*cos(2*pi*x2)"),
        ]];
        ClosedFormMap::from_strings(
            Torus::shared(),
            &fwd,
            None,
            Some(&jac),
            format!("torus_sine(a={a}, b={b})"),
        )
    }

    /// Rigid torus translation; `torus_rotation(0, 0)` is the identity.
    pub fn torus_rotation(dx: f64, dy: f64) -> Result<Self, DynamicsError> {
        let fwd = [[format!("x1 + {dx:?}"), format!("x2 + {dy:?}")]];
        let bwd = [[format!("x1 - {dx:?}"), format!("x2 - {dy:?}")]];
        let jac = [[
            "1".to_string(),
            "0".to_string(),
            "0".to_string(),
            "1".to_string(),
        ]];
        ClosedFormMap::from_strings(
            Torus::shared(),
            &fwd,
            Some(&bwd),
            Some(&jac),
            format!("torus_rotation({dx}, {dy})"),
        )
    }

    /// Raw (uncanonicalized) forward image in the chart of the input.
    pub fn raw_forward(&self, chart: usize, v: Vector2<f64>) -> Result<Vector2<f64>, DynamicsError> {
        eval_pair(&self.forward[chart], v)
    }

    fn raw_backward(&self, chart: usize, v: Vector2<f64>) -> Option<Result<Vector2<f64>, DynamicsError>> {
        self.backward.as_ref().map(|b| eval_pair(&b[chart], v))
    }

    fn raw_jacobian(&self, chart: usize, v: Vector2<f64>) -> Result<Matrix2<f64>, DynamicsError> {
        if let Some(jac) = &self.jac {
            let q = &jac[chart];
            let vals = [v.x, v.y];
            Ok(Matrix2::new(
                q[0].eval(&vals)?,
                q[1].eval(&vals)?,
                q[2].eval(&vals)?,
                q[3].eval(&vals)?,
            ))
        } else {
            fd_jacobian(|w| self.raw_forward(chart, w), v)
        }
    }

    /// Newton inversion of the forward map in the chart of `p`, seeded at
    /// `p` itself. Damping halves the step while the residual grows.
    fn newton_invert(&self, p: &SurfacePoint) -> Result<SurfacePoint, DynamicsError> {
        let chart = p.chart;
        let residual = |y: Vector2<f64>| -> Result<Vector2<f64>, DynamicsError> {
            let raw = self.raw_forward(chart, y)?;
            let (canon, _) = self.surface.canonicalize(chart, raw);
            let canon = if canon.chart == chart {
                canon
            } else {
                self.surface.transition(&canon, chart)?
            };
            if self.surface.name() == "torus" {
                Ok(torus_diff(canon.coords, p.coords))
            } else {
                Ok(canon.coords - p.coords)
            }
        };
        let mut y = p.coords;
        let mut r = residual(y)?;
        for _ in 0..50 {
            if r.norm() < 1e-12 {
                return Ok(SurfacePoint { chart, coords: y });
            }
            let jac = self.raw_jacobian(chart, y)?;
            let step = jac
                .try_inverse()
                .ok_or(DynamicsError::SingularJacobian { cond: f64::INFINITY })?
                * r;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..8 {
                let cand = y - lambda * step;
                if let Ok(rc) = residual(cand) {
                    if rc.norm() < r.norm() {
                        y = cand;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r.norm() < 1e-12 {
            Ok(SurfacePoint { chart, coords: y })
        } else {
            Err(DynamicsError::NewtonInversion { residual: r.norm() })
        }
    }
}

fn parse_map_expr(text: &str) -> Result<Expr, DynamicsError> {
    expr::parse(text, &MAP_VARS).map_err(|e| DynamicsError::Unsupported(e.to_string()))
}

fn eval_pair(pair: &[Expr; 2], v: Vector2<f64>) -> Result<Vector2<f64>, DynamicsError> {
    let vals = [v.x, v.y];
    Ok(Vector2::new(pair[0].eval(&vals)?, pair[1].eval(&vals)?))
}

impl Diffeo for ClosedFormMap {
    fn surface(&self) -> &Arc<dyn Surface> {
        &self.surface
    }

    fn apply(&self, p: &SurfacePoint, dir: Direction) -> Result<SurfacePoint, DynamicsError> {
        match dir {
            Direction::Forward => {
                let raw = self.raw_forward(p.chart, p.coords)?;
                Ok(self.surface.canonicalize(p.chart, raw).0)
            }
            Direction::Backward => match self.raw_backward(p.chart, p.coords) {
                Some(raw) => Ok(self.surface.canonicalize(p.chart, raw?).0),
                None => self.newton_invert(p),
            },
        }
    }

    fn step_jacobian(
        &self,
        p: &SurfacePoint,
        dir: Direction,
    ) -> Result<(SurfacePoint, Matrix2<f64>), DynamicsError> {
        match dir {
            Direction::Forward => {
                let raw = self.raw_forward(p.chart, p.coords)?;
                let jac_raw = self.raw_jacobian(p.chart, p.coords)?;
                let (q, adjust) = self.surface.canonicalize(p.chart, raw);
                Ok((q, adjust * jac_raw))
            }
            Direction::Backward => {
                // d(g⁻¹)(p) = [dg(q)]⁻¹ with q = g⁻¹(p).
                let q = self.apply(p, Direction::Backward)?;
                let (_, fwd) = self.step_jacobian(&q, Direction::Forward)?;
                let inv = fwd
                    .try_inverse()
                    .ok_or(DynamicsError::SingularJacobian { cond: f64::INFINITY })?;
                Ok((q, inv))
            }
        }
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}
