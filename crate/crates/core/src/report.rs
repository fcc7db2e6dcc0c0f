//! CSV and JSON writers shared by the command-line front end.
//!
//! All numeric output is finite: infinities are saturated to the largest
//! double so downstream tools never see `inf`/`NaN` tokens. Timestamps go
//! into a single `generated_at` JSON key; CSV bodies carry no volatile
//! fields, so identical runs produce byte-identical CSV.

use serde_json::{json, Value};

use crate::dynamics::{FixedPointRecord, MorseSmaleReport};
use crate::laurent::{AnnulusCriterion, LaurentPolynomial, SIntervalSet};
use crate::symbol::ProbeReport;
use crate::weights::{PredictedRates, WeightSeries};
use num_complex::Complex64;

/// Saturate non-finite values; output files must never contain `inf`/`NaN`.
pub fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else if v.is_nan() {
        0.0
    } else if v > 0.0 {
        f64::MAX
    } else {
        -f64::MAX
    }
}

fn fmt(v: f64) -> String {
    format!("{}", sanitize(v))
}

fn endpoint_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn interval_set_json(set: &SIntervalSet) -> Value {
    Value::Array(
        set.intervals()
            .iter()
            .map(|(a, b)| Value::Array(vec![endpoint_json(*a), endpoint_json(*b)]))
            .collect(),
    )
}

pub fn fixed_points_csv(fps: &[FixedPointRecord]) -> String {
    let mut out = String::from(
        "index,chart,x1,x2,type,alpha1,alpha2,lambda_min,lambda_max,det_codifferential,def1_ok,residual\n",
    );
    for (i, fp) in fps.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            i,
            fp.point.chart,
            fmt(fp.point.coords.x),
            fmt(fp.point.coords.y),
            fp.kind.label(),
            fmt(fp.alpha.0),
            fmt(fp.alpha.1),
            fmt(fp.lambda_min()),
            fmt(fp.lambda_max()),
            fmt(fp.det_codifferential),
            fp.def1.ok,
            fmt(fp.residual),
        ));
    }
    out
}

fn fixed_point_json(index: usize, fp: &FixedPointRecord) -> Value {
    json!({
        "index": index,
        "chart": fp.point.chart,
        "coords": [sanitize(fp.point.coords.x), sanitize(fp.point.coords.y)],
        "type": fp.kind.label(),
        "dg_eigenvalues": [sanitize(fp.alpha.0), sanitize(fp.alpha.1)],
        "dg_eigendirections": [
            [sanitize(fp.alpha_dirs.0.x), sanitize(fp.alpha_dirs.0.y)],
            [sanitize(fp.alpha_dirs.1.x), sanitize(fp.alpha_dirs.1.y)],
        ],
        "codifferential_eigenvalues": [sanitize(fp.lambda_min()), sanitize(fp.lambda_max())],
        "det_codifferential": sanitize(fp.det_codifferential),
        "def1_ok": fp.def1.ok,
        "def1_reasons": fp.def1.reasons,
        "newton_residual": sanitize(fp.residual),
    })
}

pub fn fixed_points_json(diffeo: &str, fps: &[FixedPointRecord], generated_at: u64) -> Value {
    json!({
        "diffeo": diffeo,
        "fixed_points": fps.iter().enumerate().map(|(i, fp)| fixed_point_json(i, fp)).collect::<Vec<_>>(),
        "generated_at": generated_at,
    })
}

pub fn validate_json(diffeo: &str, report: &MorseSmaleReport, generated_at: u64) -> Value {
    json!({
        "diffeo": diffeo,
        "passed": report.passed,
        "eigenvalue_conditions_ok": report.def1_ok,
        "fixed_set_finite": report.fixed_set_finite,
        "fixed_points": report.fixed_points.iter().enumerate()
            .map(|(i, fp)| fixed_point_json(i, fp)).collect::<Vec<_>>(),
        "periodic_scan": {
            "max_period": report.periodic.max_period,
            "violations": report.periodic.violations.iter().map(|v| json!({
                "period": v.period,
                "chart": v.point.chart,
                "coords": [sanitize(v.point.coords.x), sanitize(v.point.coords.y)],
                "distance_to_fixed_set": sanitize(v.distance_to_fixed_set),
            })).collect::<Vec<_>>(),
            "notes": report.periodic.notes,
        },
        "generated_at": generated_at,
    })
}

pub fn weights_csv(series: &WeightSeries) -> String {
    let mut out = String::from("n,W,logW\n");
    for (i, lw) in series.log_values.iter().enumerate() {
        let n = series.n_min + i as i64;
        out.push_str(&format!("{},{},{}\n", n, fmt(lw.exp()), fmt(*lw)));
    }
    out
}

pub struct WeightsSidecar<'a> {
    pub diffeo: &'a str,
    pub x: [f64; 2],
    pub chart: usize,
    pub xi: [f64; 2],
    pub series: &'a WeightSeries,
    pub predicted: &'a PredictedRates,
    pub branch_plus: &'a str,
    pub branch_minus: &'a str,
    pub limit_plus: usize,
    pub limit_minus: usize,
}

pub fn weights_json(input: &WeightsSidecar, generated_at: u64) -> Value {
    let fit = &input.series.fit;
    let p = input.predicted;
    json!({
        "diffeo": input.diffeo,
        "x": {"chart": input.chart, "coords": input.x},
        "xi": input.xi,
        "s": input.series.s,
        "convention": input.series.convention.name(),
        "n_range": [input.series.n_min, input.series.n_max],
        "fitted": {
            "theta_plus": sanitize(fit.theta_plus),
            "theta_minus": sanitize(fit.theta_minus),
            "residual_plus": sanitize(fit.residual_plus),
            "residual_minus": sanitize(fit.residual_minus),
            "reliable_plus": fit.reliable_plus,
            "reliable_minus": fit.reliable_minus,
        },
        "predicted": {
            "forward": {
                "generic": sanitize(p.forward_generic),
                "exceptional": sanitize(p.forward_exceptional),
                "log_generic": sanitize(p.forward_generic.ln()),
                "log_exceptional": sanitize(p.forward_exceptional.ln()),
            },
            "backward": {
                "generic": sanitize(p.backward_generic),
                "exceptional": sanitize(p.backward_exceptional),
                "log_generic": sanitize(-p.backward_generic.ln()),
                "log_exceptional": sanitize(-p.backward_exceptional.ln()),
            },
        },
        "branch": {"plus": input.branch_plus, "minus": input.branch_minus},
        "orbit_limits": {"plus": input.limit_plus, "minus": input.limit_minus},
        "generated_at": generated_at,
    })
}

pub fn annulus_csv(rows: &[AnnulusCriterion]) -> String {
    let mut out = String::from("s,r,R,r_fixed_point,r_eigen_index,R_fixed_point,R_eigen_index\n");
    for a in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(a.s),
            fmt(a.r),
            fmt(a.big_r),
            a.r_source.0,
            a.r_source.1,
            a.big_r_source.0,
            a.big_r_source.1,
        ));
    }
    out
}

pub fn annulus_json(
    diffeo: &str,
    fps: &[FixedPointRecord],
    rows: &[AnnulusCriterion],
    generated_at: u64,
) -> Value {
    json!({
        "diffeo": diffeo,
        "fixed_points": fps.iter().enumerate()
            .map(|(i, fp)| fixed_point_json(i, fp)).collect::<Vec<_>>(),
        "annuli": rows.iter().map(|a| json!({
            "s": sanitize(a.s),
            "r": sanitize(a.r),
            "R": sanitize(a.big_r),
            "r_attained_by": {"fixed_point": a.r_source.0, "eigen_index": a.r_source.1},
            "R_attained_by": {"fixed_point": a.big_r_source.0, "eigen_index": a.big_r_source.1},
        })).collect::<Vec<_>>(),
        "generated_at": generated_at,
    })
}

pub struct ConstCoefReport<'a> {
    pub diffeo: &'a str,
    pub polynomial: &'a LaurentPolynomial,
    pub roots: &'a [Complex64],
    /// Per requested exponent: the annulus and the pointwise verdict.
    pub rows: Vec<(AnnulusCriterion, bool, Option<Complex64>)>,
    pub intervals: &'a SIntervalSet,
}

pub fn const_coef_json(input: &ConstCoefReport, generated_at: u64) -> Value {
    json!({
        "diffeo": input.diffeo,
        "coefficients": input.polynomial.terms().map(|(k, a)| json!({
            "k": k, "re": sanitize(a.re), "im": sanitize(a.im),
        })).collect::<Vec<_>>(),
        "roots": input.roots.iter().map(|z| json!({
            "re": sanitize(z.re), "im": sanitize(z.im), "modulus": sanitize(z.norm()),
        })).collect::<Vec<_>>(),
        "s_values": input.rows.iter().map(|(a, ok, witness)| json!({
            "s": sanitize(a.s),
            "r": sanitize(a.r),
            "R": sanitize(a.big_r),
            "invertible": ok,
            "witness": witness.map(|z| json!({
                "re": sanitize(z.re), "im": sanitize(z.im), "modulus": sanitize(z.norm()),
            })).unwrap_or(Value::Null),
        })).collect::<Vec<_>>(),
        "intervals": interval_set_json(input.intervals),
        "generated_at": generated_at,
    })
}

pub fn probe_csv(report: &ProbeReport) -> String {
    let mut out =
        String::from("s,sample_id,x1,x2,xi1,xi2,N,sigma_min,limit_plus,limit_minus,verdict\n");
    for cell in &report.cells {
        let sample = &report.samples[cell.sample];
        for (n, sigma) in &cell.sigmas {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt(cell.s),
                sample.id,
                fmt(sample.x.coords.x),
                fmt(sample.x.coords.y),
                fmt(sample.xi.x),
                fmt(sample.xi.y),
                n,
                fmt(sigma.value),
                u8::from(cell.limit_plus),
                u8::from(cell.limit_minus),
                cell.verdict.label(),
            ));
        }
    }
    out
}

pub fn probe_json(diffeo: &str, report: &ProbeReport, generated_at: u64) -> Value {
    json!({
        "diffeo": diffeo,
        "convention": report.convention.name(),
        "seed": report.seed,
        "section_sizes": report.n_list,
        "s_grid": report.s_grid.iter().map(|s| sanitize(*s)).collect::<Vec<_>>(),
        "samples": report.samples.iter().map(|spec| json!({
            "id": spec.id,
            "chart": spec.x.chart,
            "x": [sanitize(spec.x.coords.x), sanitize(spec.x.coords.y)],
            "xi": [sanitize(spec.xi.x), sanitize(spec.xi.y)],
            "exceptional_plus": spec.exceptional_plus,
            "exceptional_minus": spec.exceptional_minus,
        })).collect::<Vec<_>>(),
        "per_s": report.per_s.iter().map(|(s, v)| json!({
            "s": sanitize(*s), "verdict": v.label(),
        })).collect::<Vec<_>>(),
        "estimated_elliptic_set": interval_set_json(&report.estimated),
        "single_interval": report.single_interval,
        "findings": report.findings,
        "generated_at": generated_at,
    })
}
