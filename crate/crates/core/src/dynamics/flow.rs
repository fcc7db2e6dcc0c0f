//! Time-one maps of metric gradient flows.
//!
//! The vector field is the Riemannian gradient of a Morse function given as
//! an expression in the ambient coordinates `x1, x2, x3` restricted to the
//! unit sphere. The time-one map is integrated with classical RK4 at a
//! fixed step; the variational equation rides along with the same stepper,
//! so step Jacobians are exactly the derivative of the discrete map (up to
//! the finite-difference field Jacobian).

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use super::{Diffeo, Direction, DynamicsError};
use crate::expr::{self, Expr};
use crate::geometry::{Sphere, Surface, SurfacePoint};

const AMBIENT_VARS: [&str; 3] = ["x1", "x2", "x3"];
const RK4_STEP: f64 = 1e-3;

pub struct FlowTimeOneMap {
    surface: Arc<dyn Surface>,
    morse: Expr,
    step: f64,
    name: String,
}

impl FlowTimeOneMap {
    pub fn sphere_gradient(f_text: &str) -> Result<Self, DynamicsError> {
        let morse = expr::parse(f_text, &AMBIENT_VARS)
            .map_err(|e| DynamicsError::Unsupported(e.to_string()))?;
        Ok(FlowTimeOneMap {
            surface: Sphere::shared(),
            morse,
            step: RK4_STEP,
            name: format!("sphere_gradient_flow(f = {f_text})"),
        })
    }

    fn potential(&self, chart: usize, v: Vector2<f64>) -> Result<f64, DynamicsError> {
        let ambient = Sphere::embed(&SurfacePoint { chart, coords: v });
        Ok(self.morse.eval(&ambient)?)
    }

    /// Metric gradient in chart coordinates: `(1/φ) ∇F` for the conformal
    /// factor φ of the round metric.
    fn field(&self, chart: usize, v: Vector2<f64>) -> Result<Vector2<f64>, DynamicsError> {
        let mut grad = Vector2::zeros();
        for j in 0..2 {
            let h = 1e-6_f64.max(1e-6 * v[j].abs());
            let mut vp = v;
            let mut vm = v;
            vp[j] += h;
            vm[j] -= h;
            grad[j] = (self.potential(chart, vp)? - self.potential(chart, vm)?) / (2.0 * h);
        }
        Ok(grad / Sphere::conformal_factor(v))
    }

    fn field_jacobian(&self, chart: usize, v: Vector2<f64>) -> Result<Matrix2<f64>, DynamicsError> {
        let mut out = Matrix2::zeros();
        for j in 0..2 {
            let h = 1e-4_f64.max(1e-4 * v[j].abs());
            let mut vp = v;
            let mut vm = v;
            vp[j] += h;
            vm[j] -= h;
            let fp = self.field(chart, vp)?;
            let fm = self.field(chart, vm)?;
            let col = (fp - fm) / (2.0 * h);
            out[(0, j)] = col[0];
            out[(1, j)] = col[1];
        }
        Ok(out)
    }

    /// Integrate the time-one map; the variational matrix is carried only if
    /// requested. Chart changes between steps conjugate the matrix by the
    /// transition Jacobian.
    fn flow(
        &self,
        p: &SurfacePoint,
        dir: Direction,
        with_jac: bool,
    ) -> Result<(SurfacePoint, Matrix2<f64>), DynamicsError> {
        let sign = match dir {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let h = self.step;
        let n_steps = (1.0 / h).round() as usize;
        let mut chart = p.chart;
        let mut v = p.coords;
        let mut m = Matrix2::identity();
        for _ in 0..n_steps {
            let f = |w: Vector2<f64>| -> Result<Vector2<f64>, DynamicsError> {
                Ok(self.field(chart, w)? * sign)
            };
            let k1 = f(v)?;
            let k2 = f(v + (h / 2.0) * k1)?;
            let k3 = f(v + (h / 2.0) * k2)?;
            let k4 = f(v + h * k3)?;
            if with_jac {
                let dj = |w: Vector2<f64>| -> Result<Matrix2<f64>, DynamicsError> {
                    Ok(self.field_jacobian(chart, w)? * sign)
                };
                let m1 = dj(v)? * m;
                let m2 = dj(v + (h / 2.0) * k1)? * (m + (h / 2.0) * m1);
                let m3 = dj(v + (h / 2.0) * k2)? * (m + (h / 2.0) * m2);
                let m4 = dj(v + h * k3)? * (m + h * m3);
                m += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
            }
            v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            // Re-chart mid-flow so stereographic coordinates stay conditioned.
            let (q, adjust) = self.surface.canonicalize(chart, v);
            if q.chart != chart {
                m = adjust * m;
                chart = q.chart;
            }
            v = q.coords;
        }
        Ok((SurfacePoint { chart, coords: v }, m))
    }
}

impl Diffeo for FlowTimeOneMap {
    fn surface(&self) -> &Arc<dyn Surface> {
        &self.surface
    }

    fn apply(&self, p: &SurfacePoint, dir: Direction) -> Result<SurfacePoint, DynamicsError> {
        Ok(self.flow(p, dir, false)?.0)
    }

    fn step_jacobian(
        &self,
        p: &SurfacePoint,
        dir: Direction,
    ) -> Result<(SurfacePoint, Matrix2<f64>), DynamicsError> {
        self.flow(p, dir, true)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::fd_jacobian;

    fn example_flow() -> FlowTimeOneMap {
        FlowTimeOneMap::sphere_gradient("x3 + 0.2*x1*x1").unwrap()
    }

    #[test]
    fn flow_inverse_round_trip() {
        let g = example_flow();
        for (chart, x, y) in [(0, 0.4, 0.1), (1, -0.3, 0.6), (0, 1.1, -0.2)] {
            let p = SurfacePoint::new(chart, x, y);
            let q = g.apply(&p, Direction::Forward).unwrap();
            let back = g.apply(&q, Direction::Backward).unwrap();
            assert!(
                g.surface().distance(&back, &p) < 1e-9,
                "round trip failed at chart {chart} ({x},{y}): got {back:?}"
            );
        }
    }

    #[test]
    fn variational_jacobian_matches_finite_differences() {
        let g = example_flow();
        let p = SurfacePoint::new(0, 0.35, 0.15);
        let (q, jac) = g.step_jacobian(&p, Direction::Forward).unwrap();
        let fd = fd_jacobian(
            |w| {
                let image = g
                    .apply(&SurfacePoint { chart: 0, coords: w }, Direction::Forward)
                    .unwrap();
                // The flow stays chart-0 here; guard anyway.
                assert_eq!(image.chart, q.chart);
                Ok(image.coords)
            },
            p.coords,
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let scale = jac[(i, j)].abs().max(1.0);
                assert!(
                    (jac[(i, j)] - fd[(i, j)]).abs() / scale < 1e-5,
                    "({i},{j}): variational {} vs fd {}",
                    jac[(i, j)],
                    fd[(i, j)]
                );
            }
        }
    }

    #[test]
    fn gradient_flow_moves_uphill() {
        let g = example_flow();
        let p = SurfacePoint::new(0, 0.7, -0.4);
        let before = g.potential(p.chart, p.coords).unwrap();
        let q = g.apply(&p, Direction::Forward).unwrap();
        let after = g.potential(q.chart, q.coords).unwrap();
        assert!(after > before, "potential decreased: {before} -> {after}");
    }
}
