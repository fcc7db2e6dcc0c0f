//! Named strategy registries.
//!
//! Surfaces and diffeomorphisms are interchangeable strategies behind the
//! [`Surface`] and [`Diffeo`] traits. Each concrete implementation registers
//! here under a name; JSON configuration (and ultimately the command line)
//! selects one at runtime by that name. Weight conventions are selected the
//! same way through [`WeightConvention::from_str`].

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::config::ConfigError;
use crate::dynamics::{ClosedFormMap, Diffeo, FlowTimeOneMap};
use crate::geometry::{Sphere, Surface, Torus};
use crate::weights::WeightConvention;

pub type SurfaceBuilder = fn(&Value) -> Result<Arc<dyn Surface>, ConfigError>;
pub type DiffeoBuilder = fn(Arc<dyn Surface>, &Value) -> Result<Arc<dyn Diffeo>, ConfigError>;

pub struct Registry {
    surfaces: BTreeMap<&'static str, SurfaceBuilder>,
    diffeos: BTreeMap<&'static str, DiffeoBuilder>,
}

fn type_name(cfg: &Value, what: &str) -> Result<String, ConfigError> {
    cfg.get("type")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ConfigError::Schema(format!("{what} needs a string `type` field")))
}

fn decode<T: for<'de> Deserialize<'de>>(cfg: &Value, what: &str) -> Result<T, ConfigError> {
    serde_json::from_value(cfg.clone())
        .map_err(|e| ConfigError::Schema(format!("{what}: {e}")))
}

fn expect_surface(
    surface: &Arc<dyn Surface>,
    expected: &str,
    diffeo: &str,
) -> Result<(), ConfigError> {
    if surface.name() == expected {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!(
            "diffeo `{diffeo}` lives on the {expected}, but the configured surface is `{}`",
            surface.name()
        )))
    }
}

// --- surface builders -------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BareSurfaceParams {
    #[serde(rename = "type")]
    _type: String,
}

fn build_torus(cfg: &Value) -> Result<Arc<dyn Surface>, ConfigError> {
    decode::<BareSurfaceParams>(cfg, "surface")?;
    Ok(Torus::shared())
}

fn build_sphere(cfg: &Value) -> Result<Arc<dyn Surface>, ConfigError> {
    decode::<BareSurfaceParams>(cfg, "surface")?;
    Ok(Sphere::shared())
}

// --- diffeomorphism builders -------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TorusSineParams {
    #[serde(rename = "type")]
    _type: String,
    a: f64,
    b: f64,
}

fn build_torus_sine(
    surface: Arc<dyn Surface>,
    cfg: &Value,
) -> Result<Arc<dyn Diffeo>, ConfigError> {
    let p: TorusSineParams = decode(cfg, "diffeo")?;
    expect_surface(&surface, "torus", "torus_sine")?;
    Ok(Arc::new(
        ClosedFormMap::torus_sine(p.a, p.b).map_err(|e| ConfigError::Invalid(e.to_string()))?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TorusRotationParams {
    #[serde(rename = "type")]
    _type: String,
    dx: f64,
    dy: f64,
}

fn build_torus_rotation(
    surface: Arc<dyn Surface>,
    cfg: &Value,
) -> Result<Arc<dyn Diffeo>, ConfigError> {
    let p: TorusRotationParams = decode(cfg, "diffeo")?;
    expect_surface(&surface, "torus", "torus_rotation")?;
    Ok(Arc::new(
        ClosedFormMap::torus_rotation(p.dx, p.dy)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClosedFormParams {
    #[serde(rename = "type")]
    _type: String,
    /// Forward map per chart: two coordinate expressions in `x1, x2`.
    g: Vec<[String; 2]>,
    #[serde(default)]
    g_inverse: Option<Vec<[String; 2]>>,
    /// Analytic Jacobian entries per chart, row-major.
    #[serde(default)]
    jacobian: Option<Vec<[String; 4]>>,
}

fn build_closed_form(
    surface: Arc<dyn Surface>,
    cfg: &Value,
) -> Result<Arc<dyn Diffeo>, ConfigError> {
    let p: ClosedFormParams = decode(cfg, "diffeo")?;
    let map = ClosedFormMap::from_strings(
        surface,
        &p.g,
        p.g_inverse.as_deref(),
        p.jacobian.as_deref(),
        "closed_form",
    )
    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(Arc::new(map))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GradientFlowParams {
    #[serde(rename = "type")]
    _type: String,
    /// Morse function over the ambient coordinates `x1, x2, x3`.
    f: String,
}

fn build_sphere_gradient_flow(
    surface: Arc<dyn Surface>,
    cfg: &Value,
) -> Result<Arc<dyn Diffeo>, ConfigError> {
    let p: GradientFlowParams = decode(cfg, "diffeo")?;
    expect_surface(&surface, "sphere", "sphere_gradient_flow")?;
    Ok(Arc::new(
        FlowTimeOneMap::sphere_gradient(&p.f).map_err(|e| ConfigError::Invalid(e.to_string()))?,
    ))
}

impl Registry {
    pub fn builtin() -> Self {
        let mut r = Registry {
            surfaces: BTreeMap::new(),
            diffeos: BTreeMap::new(),
        };
        r.register_surface("torus", build_torus);
        r.register_surface("sphere", build_sphere);
        r.register_diffeo("torus_sine", build_torus_sine);
        r.register_diffeo("torus_rotation", build_torus_rotation);
        r.register_diffeo("closed_form", build_closed_form);
        r.register_diffeo("sphere_gradient_flow", build_sphere_gradient_flow);
        r
    }

    pub fn register_surface(&mut self, name: &'static str, builder: SurfaceBuilder) {
        self.surfaces.insert(name, builder);
    }

    pub fn register_diffeo(&mut self, name: &'static str, builder: DiffeoBuilder) {
        self.diffeos.insert(name, builder);
    }

    pub fn surface_names(&self) -> Vec<&'static str> {
        self.surfaces.keys().copied().collect()
    }

    pub fn diffeo_names(&self) -> Vec<&'static str> {
        self.diffeos.keys().copied().collect()
    }

    pub fn build_surface(&self, cfg: &Value) -> Result<Arc<dyn Surface>, ConfigError> {
        let name = type_name(cfg, "surface")?;
        let builder = self.surfaces.get(name.as_str()).ok_or_else(|| {
            ConfigError::UnknownStrategy {
                kind: "surface",
                name: name.clone(),
                available: self.surface_names().join(", "),
            }
        })?;
        builder(cfg)
    }

    pub fn build_diffeo(
        &self,
        surface: Arc<dyn Surface>,
        cfg: &Value,
    ) -> Result<Arc<dyn Diffeo>, ConfigError> {
        let name = type_name(cfg, "diffeo")?;
        let builder = self.diffeos.get(name.as_str()).ok_or_else(|| {
            ConfigError::UnknownStrategy {
                kind: "diffeo",
                name: name.clone(),
                available: self.diffeo_names().join(", "),
            }
        })?;
        builder(surface, cfg)
    }

    pub fn convention(name: &str) -> Result<WeightConvention, ConfigError> {
        WeightConvention::from_str(name).map_err(ConfigError::Invalid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn builds_builtin_strategies_by_name() {
        let r = Registry::builtin();
        let torus = r.build_surface(&json!({"type": "torus"})).unwrap();
        assert_eq!(torus.name(), "torus");
        let g = r
            .build_diffeo(torus, &json!({"type": "torus_sine", "a": 0.5, "b": 0.25}))
            .unwrap();
        assert!(g.describe().contains("torus_sine"));

        let sphere = r.build_surface(&json!({"type": "sphere"})).unwrap();
        let flow = r
            .build_diffeo(
                sphere,
                &json!({"type": "sphere_gradient_flow", "f": "x3 + 0.2*x1*x1"}),
            )
            .unwrap();
        assert!(flow.describe().contains("sphere_gradient_flow"));
    }

    #[test]
    fn unknown_names_and_keys_are_rejected() {
        let r = Registry::builtin();
        assert!(r.build_surface(&json!({"type": "klein_bottle"})).is_err());
        assert!(r
            .build_surface(&json!({"type": "torus", "radius": 2.0}))
            .is_err());
        let torus = r.build_surface(&json!({"type": "torus"})).unwrap();
        assert!(r
            .build_diffeo(
                torus.clone(),
                &json!({"type": "torus_sine", "a": 0.5, "b": 0.25, "c": 1.0})
            )
            .is_err());
        // Surface/diffeo mismatch.
        assert!(r
            .build_diffeo(
                torus,
                &json!({"type": "sphere_gradient_flow", "f": "x3"})
            )
            .is_err());
    }
}
