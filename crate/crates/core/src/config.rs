//! JSON configuration schema and the small parsers shared with the CLI.
//!
//! A configuration selects a surface and a diffeomorphism by registry name,
//! optionally an operator (shift powers mapped to symbol expressions), and
//! analysis parameters. Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::laurent::LaurentPolynomial;
use crate::symbol::{OperatorSpec, SymbolError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Io(String),
    #[error("config: {0}")]
    Schema(String),
    #[error("config: unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Surface strategy, e.g. `{"type": "torus"}`.
    pub surface: Value,
    /// Diffeomorphism strategy, e.g. `{"type": "torus_sine", "a": 0.5, "b": 0.25}`.
    pub diffeo: Value,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    /// Operator order; only order zero is supported. Operators of other
    /// orders must be reduced by composing with a power of the Laplacian
    /// before being described here.
    #[serde(default)]
    pub order: i64,
    /// Shift power (as decimal string key) to symbol expression in
    /// `x1, x2, xi1, xi2`.
    pub terms: BTreeMap<String, String>,
}

impl OperatorConfig {
    pub fn to_spec(&self) -> Result<OperatorSpec, ConfigError> {
        if self.order != 0 {
            return Err(ConfigError::Invalid(
                "operator order must be 0; reduce the order first".into(),
            ));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (key, text) in &self.terms {
            let k: i64 = key
                .parse()
                .map_err(|_| ConfigError::Schema(format!("bad shift power key `{key}`")))?;
            terms.push((k, text.clone()));
        }
        OperatorSpec::from_strings(&terms).map_err(|e: SymbolError| {
            ConfigError::Invalid(e.to_string())
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SValues {
    Single(f64),
    List(Vec<f64>),
    /// `"start:end:step"` inclusive grid.
    Range(String),
}

impl SValues {
    pub fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        match self {
            SValues::Single(v) => Ok(vec![*v]),
            SValues::List(vs) => {
                if vs.is_empty() {
                    Err(ConfigError::Invalid("empty exponent list".into()))
                } else {
                    Ok(vs.clone())
                }
            }
            SValues::Range(text) => parse_s_values(text),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointConfig {
    Coords([f64; 2]),
    Chart { chart: usize, coords: [f64; 2] },
}

impl PointConfig {
    pub fn chart(&self) -> usize {
        match self {
            PointConfig::Coords(_) => 0,
            PointConfig::Chart { chart, .. } => *chart,
        }
    }

    pub fn coords(&self) -> [f64; 2] {
        match self {
            PointConfig::Coords(c) => *c,
            PointConfig::Chart { coords, .. } => *coords,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Exponent value, list, or `"start:end:step"` grid.
    pub s: Option<SValues>,
    pub x: Option<PointConfig>,
    pub xi: Option<[f64; 2]>,
    pub n_range: Option<[i64; 2]>,
    pub section_sizes: Vec<usize>,
    pub sample_count: usize,
    pub seed: u64,
    pub convention: String,
    pub grid_n: usize,
    pub max_period: usize,
    /// Constant coefficients as `"k:re[,im]"` pairs, e.g. `"0:1,1:-0.25"`.
    pub coefficients: Option<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            s: None,
            x: None,
            xi: None,
            n_range: None,
            section_sizes: vec![256, 512, 1024],
            sample_count: 8,
            seed: 0,
            convention: "t1_pinned".into(),
            grid_n: 16,
            max_period: 6,
            coefficients: None,
        }
    }
}

impl Config {
    pub fn from_str(text: &str) -> Result<Config, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Config::from_str(&text)
    }
}

/// Parse an exponent specification: either a comma list `"0,0.5,1"` or an
/// inclusive range `"start:end:step"`.
pub fn parse_s_values(text: &str) -> Result<Vec<f64>, ConfigError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ConfigError::Invalid("empty exponent specification".into()));
    }
    let bad = |t: &str| ConfigError::Invalid(format!("bad exponent specification `{t}`"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(text));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad(text))?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad(text))?;
        let step: f64 = parts[2].trim().parse().map_err(|_| bad(text))?;
        if !(step > 0.0) || end < start {
            return Err(bad(text));
        }
        let count = ((end - start) / step).round() as usize;
        let mut out = Vec::with_capacity(count + 1);
        for i in 0..=count {
            let v = start + step * i as f64;
            if v <= end + 1e-12 * step {
                out.push(v);
            }
        }
        Ok(out)
    } else {
        text.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(text)))
            .collect()
    }
}

pub fn parse_section_sizes(text: &str) -> Result<Vec<usize>, ConfigError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| ConfigError::Invalid(format!("bad section size list `{text}`")))
        })
        .collect()
}

pub fn parse_n_range(text: &str) -> Result<[i64; 2], ConfigError> {
    let bad = || ConfigError::Invalid(format!("bad n range `{text}` (expected `min:max`)"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(bad());
    }
    let lo: i64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: i64 = parts[1].trim().parse().map_err(|_| bad())?;
    if lo > 0 || hi < 0 || lo < -10_000 || hi > 10_000 {
        return Err(ConfigError::Invalid(format!(
            "n range `{text}` must satisfy min <= 0 <= max within ±10000"
        )));
    }
    Ok([lo, hi])
}

pub fn parse_pair(text: &str, what: &str) -> Result<[f64; 2], ConfigError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(ConfigError::Invalid(format!(
            "bad {what} `{text}` (expected two comma-separated numbers)"
        )));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("bad {what} `{text}`")))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("bad {what} `{text}`")))?;
    Ok([a, b])
}

/// Parse constant coefficients in `"k:re[,im]"` form: tokens with a colon
/// start a new `k:re` pair; a bare number attaches as the imaginary part of
/// the preceding pair. `"0:1,1:-0.25"` and `"0:1,0.5,1:-0.25"` are both
/// valid (the second gives `a_0 = 1 + 0.5i`).
pub fn parse_coefficients(text: &str) -> Result<Vec<(i64, Complex64)>, ConfigError> {
    let bad = |detail: &str| ConfigError::Invalid(format!("bad coefficients `{text}`: {detail}"));
    let mut pairs: Vec<(i64, Complex64)> = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if let Some((k_text, re_text)) = token.split_once(':') {
            let k: i64 = k_text
                .trim()
                .parse()
                .map_err(|_| bad("shift power is not an integer"))?;
            let re: f64 = re_text
                .trim()
                .parse()
                .map_err(|_| bad("real part is not a number"))?;
            if pairs.iter().any(|(kk, _)| *kk == k) {
                return Err(bad("duplicate shift power"));
            }
            pairs.push((k, Complex64::new(re, 0.0)));
        } else {
            let im: f64 = token
                .parse()
                .map_err(|_| bad("imaginary part is not a number"))?;
            let last = pairs
                .last_mut()
                .ok_or_else(|| bad("imaginary part before any k:re pair"))?;
            last.1.im = im;
        }
    }
    if pairs.is_empty() {
        return Err(bad("no coefficients"));
    }
    Ok(pairs)
}

pub fn coefficients_to_polynomial(pairs: &[(i64, Complex64)]) -> LaurentPolynomial {
    LaurentPolynomial::from_terms(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = Config::from_str(
            r#"{
                "surface": {"type": "torus"},
                "diffeo": {"type": "torus_sine", "a": 0.5, "b": 0.25},
                "operator": {"terms": {"0": "2 + sin(2*pi*x1)", "1": "0.25"}},
                "analysis": {"s": "-3:5:0.25", "seed": 7, "sample_count": 4}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.analysis.seed, 7);
        let s = cfg.analysis.s.unwrap().resolve().unwrap();
        assert_eq!(s.len(), 33);
        assert_eq!(s[0], -3.0);
        assert_eq!(*s.last().unwrap(), 5.0);
        let op = cfg.operator.unwrap().to_spec().unwrap();
        assert_eq!(op.k_range(), (0, 1));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::from_str(
            r#"{"surface": {"type": "torus"}, "diffeo": {"type": "torus_sine", "a": 1, "b": 1},
                "plotting": true}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("plotting"));
        let err = Config::from_str(
            r#"{"surface": {"type": "torus"}, "diffeo": {"type": "torus_sine", "a": 1, "b": 1},
                "analysis": {"speed": 9}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("speed"));
    }

    #[test]
    fn coefficient_strings() {
        let pairs = parse_coefficients("0:1,1:-0.25").unwrap();
        assert_eq!(pairs, vec![
            (0, Complex64::new(1.0, 0.0)),
            (1, Complex64::new(-0.25, 0.0))
        ]);
        let pairs = parse_coefficients("-1:2,0.5,0:1").unwrap();
        assert_eq!(pairs[0], (-1, Complex64::new(2.0, 0.5)));
        assert!(parse_coefficients("0:1,0:2").is_err());
        assert!(parse_coefficients("1.5:1").is_err());
        assert!(parse_coefficients("0.5").is_err());
    }

    #[test]
    fn s_value_specifications() {
        assert_eq!(parse_s_values("1,2,2.5").unwrap(), vec![1.0, 2.0, 2.5]);
        let grid = parse_s_values("-1:1:0.5").unwrap();
        assert_eq!(grid, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(parse_s_values("1:0:0.5").is_err());
        assert!(parse_s_values("") .is_err());
        assert_eq!(parse_n_range("-200:200").unwrap(), [-200, 200]);
        assert!(parse_n_range("5:200").is_err());
    }
}
