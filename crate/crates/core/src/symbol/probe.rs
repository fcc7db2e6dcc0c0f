//! Ellipticity probe over a grid of Sobolev exponents.
//!
//! Ellipticity demands an invertible symbol at every nonzero cotangent
//! point, which sampling can only estimate. The sample set combines random
//! base points (whose orbits generically run source-to-sink) with the fixed
//! points themselves (whose symbols carry the saddle branches that random
//! orbits almost never see), and at every base point the covector samples
//! include both exceptional directions alongside a random one, because the
//! weighted space changes branch exactly there.

use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    limit_branch_checks, limit_symbol_data, min_singular_value, section_from_parts,
    symbol_coefficients, LimitData, OperatorSpec, SigmaMin, SymbolError,
};
use crate::dynamics::{Diffeo, FixedPointRecord};
use crate::geometry::{Covector, SurfacePoint, Variance};
use crate::laurent::SIntervalSet;
use crate::weights::{invariant_direction, weight_profile, End, WeightConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    LikelyInvertible,
    LikelyNotInvertible,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::LikelyInvertible => "likely_invertible",
            Verdict::LikelyNotInvertible => "likely_not_invertible",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleSpec {
    pub id: String,
    pub x: SurfacePoint,
    /// Unit-cometric covector components in `x`'s chart.
    pub xi: Vector2<f64>,
    pub exceptional_plus: bool,
    pub exceptional_minus: bool,
}

#[derive(Debug, Clone)]
pub struct ProbeCell {
    pub s: f64,
    pub sample: usize,
    pub sigmas: Vec<(usize, SigmaMin)>,
    pub limit_plus: bool,
    pub limit_minus: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub s_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub convention: WeightConvention,
    pub seed: u64,
    pub samples: Vec<SampleSpec>,
    /// Ordered s-major, then by sample index.
    pub cells: Vec<ProbeCell>,
    pub per_s: Vec<(f64, Verdict)>,
    pub estimated: SIntervalSet,
    pub single_interval: bool,
    pub findings: Vec<String>,
}

const FIXED_POINT_AVOIDANCE: f64 = 1e-3;
const EXCEPTIONAL_ANGLE_TOL: f64 = 1e-6;
const SIGMA_INVERTIBLE_FLOOR: f64 = 1e-4;
const SIGMA_SINGULAR_CEILING: f64 = 1e-6;

fn unit_cometric(d: &dyn Diffeo, x: &SurfacePoint, raw: Vector2<f64>) -> Vector2<f64> {
    let c = Covector {
        point: *x,
        components: raw,
        variance: Variance::Covector,
    };
    raw / d.surface().cometric_norm2(&c).sqrt()
}

fn line_angle(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    (u.dot(v) / (u.norm() * v.norm())).abs().min(1.0).acos()
}

/// Covector samples at a base point: one given direction plus the flats of
/// the two exceptional tangent lines, with branch flags from the actual
/// angles.
fn covector_samples(
    d: &dyn Diffeo,
    x: &SurfacePoint,
    rand_dir: Vector2<f64>,
    e_plus: Vector2<f64>,
    e_minus: Vector2<f64>,
    id_prefix: &str,
    rand_label: &str,
) -> Vec<SampleSpec> {
    let surface = d.surface();
    let flat = |t: Vector2<f64>| -> Vector2<f64> {
        let carrier = Covector {
            point: *x,
            components: t,
            variance: Variance::Tangent,
        };
        surface.lower(&carrier).components
    };
    let mut out = Vec::with_capacity(3);
    for (suffix, raw) in [
        (rand_label.to_string(), rand_dir),
        (":E+".to_string(), flat(e_plus)),
        (":E-".to_string(), flat(e_minus)),
    ] {
        let xi = unit_cometric(d, x, raw);
        let sharp = surface.raise(&Covector {
            point: *x,
            components: xi,
            variance: Variance::Covector,
        });
        out.push(SampleSpec {
            id: format!("{id_prefix}{suffix}"),
            x: *x,
            xi,
            exceptional_plus: line_angle(&sharp.components, &e_plus) < EXCEPTIONAL_ANGLE_TOL,
            exceptional_minus: line_angle(&sharp.components, &e_minus) < EXCEPTIONAL_ANGLE_TOL,
        });
    }
    out
}

fn random_base_point(
    d: &dyn Diffeo,
    fixed_points: &[FixedPointRecord],
    rng: &mut ChaCha8Rng,
) -> Result<SurfacePoint, SymbolError> {
    let surface = d.surface();
    for _ in 0..200 {
        let p = if surface.name() == "torus" {
            SurfacePoint::new(0, rng.gen::<f64>(), rng.gen::<f64>())
        } else {
            let chart = rng.gen_range(0..surface.chart_count());
            let r = rng.gen::<f64>().sqrt();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            SurfacePoint::new(chart, r * th.cos(), r * th.sin())
        };
        let clear = fixed_points
            .iter()
            .all(|fp| surface.distance(&fp.point, &p) > FIXED_POINT_AVOIDANCE);
        if clear {
            return Ok(p);
        }
    }
    Err(SymbolError::BadInput(
        "could not sample a base point away from the fixed-point set".into(),
    ))
}

fn build_samples(
    d: &dyn Diffeo,
    fixed_points: &[FixedPointRecord],
    sample_count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SampleSpec>, SymbolError> {
    let mut samples = Vec::new();
    for i in 0..sample_count {
        let x = random_base_point(d, fixed_points, rng)?;
        let e_plus = invariant_direction(d, fixed_points, &x, End::Plus)?.direction;
        let e_minus = invariant_direction(d, fixed_points, &x, End::Minus)?.direction;
        let th = rng.gen::<f64>() * std::f64::consts::TAU;
        let rand_dir = Vector2::new(th.cos(), th.sin());
        samples.extend(covector_samples(
            d,
            &x,
            rand_dir,
            e_plus,
            e_minus,
            &format!("rand{i}"),
            "",
        ));
    }
    // Fixed points are honest cotangent base points too, and they are the
    // only places where saddle rates enter any orbit's weight.
    for (f, fp) in fixed_points.iter().enumerate() {
        let e_plus = fp.alpha_min_dir();
        let e_minus = fp.alpha_max_dir();
        let mut rand_dir = Vector2::new(1.0, 1.0);
        for _ in 0..50 {
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            let cand = Vector2::new(th.cos(), th.sin());
            if line_angle(&cand, &e_plus) > 1e-3 && line_angle(&cand, &e_minus) > 1e-3 {
                rand_dir = cand;
                break;
            }
        }
        samples.extend(covector_samples(
            d,
            &fp.point,
            rand_dir,
            e_plus,
            e_minus,
            &format!("fp{f}"),
            ":generic",
        ));
    }
    Ok(samples)
}

struct SampleData {
    track: super::CoefficientTrack,
    profile: crate::weights::WeightProfile,
    limit_plus: LimitData,
    limit_minus: LimitData,
}

fn cell_verdict(
    sigmas: &[(usize, SigmaMin)],
    limit_plus_ok: bool,
    limit_minus_ok: bool,
) -> Verdict {
    let limits_ok = limit_plus_ok && limit_minus_ok;
    let all_bounded = sigmas
        .iter()
        .all(|(_, s)| s.converged && s.value >= SIGMA_INVERTIBLE_FLOOR);
    if all_bounded && limits_ok {
        return Verdict::LikelyInvertible;
    }
    let first = sigmas.first().map(|(_, s)| s.value).unwrap_or(0.0);
    let last = sigmas.last().map(|(_, s)| s.value).unwrap_or(0.0);
    let collapsing = last < SIGMA_SINGULAR_CEILING && last <= 1.5 * first;
    if collapsing || !limits_ok {
        return Verdict::LikelyNotInvertible;
    }
    Verdict::Inconclusive
}

/// Probe symbol invertibility over `s_grid`. Randomness is fully determined
/// by `seed`; the cell table is emitted in a fixed order so identical
/// configurations produce identical output.
pub fn ellipticity_probe(
    op: &OperatorSpec,
    d: &dyn Diffeo,
    fixed_points: &[FixedPointRecord],
    s_grid: &[f64],
    sample_count: usize,
    n_list: &[usize],
    seed: u64,
    convention: WeightConvention,
) -> Result<ProbeReport, SymbolError> {
    if s_grid.is_empty() || n_list.is_empty() || sample_count == 0 {
        return Err(SymbolError::BadInput(
            "probe needs a nonempty exponent grid, section sizes and sample count".into(),
        ));
    }
    if fixed_points.is_empty() || fixed_points.iter().any(|fp| !fp.def1.ok) {
        return Err(SymbolError::BadInput(
            "probe needs a validated fixed-point list".into(),
        ));
    }
    let mut n_list = n_list.to_vec();
    n_list.sort_unstable();
    n_list.dedup();
    let n_max = *n_list.last().unwrap() as i64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = build_samples(d, fixed_points, sample_count, &mut rng)?;

    let mut data = Vec::with_capacity(samples.len());
    for sample in &samples {
        let xi = Covector {
            point: sample.x,
            components: sample.xi,
            variance: Variance::Covector,
        };
        let track = symbol_coefficients(op, d, &sample.x, &xi, -n_max, n_max)?;
        let profile = weight_profile(d, &sample.x, &xi, convention, -n_max, n_max)?;
        let limit_plus = limit_symbol_data(op, d, fixed_points, &sample.x, &xi, End::Plus)?;
        let limit_minus = limit_symbol_data(op, d, fixed_points, &sample.x, &xi, End::Minus)?;
        data.push(SampleData {
            track,
            profile,
            limit_plus,
            limit_minus,
        });
    }

    let mut cells = Vec::with_capacity(s_grid.len() * samples.len());
    let mut per_s = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let mut aggregate = Verdict::LikelyInvertible;
        for (idx, (sample, sd)) in samples.iter().zip(&data).enumerate() {
            let (plus_gen, plus_exc) =
                limit_branch_checks(&sd.limit_plus, fixed_points, s, End::Plus);
            let (minus_gen, minus_exc) =
                limit_branch_checks(&sd.limit_minus, fixed_points, s, End::Minus);
            let plus_ok = if sample.exceptional_plus {
                plus_exc.pass
            } else {
                plus_gen.pass
            };
            let minus_ok = if sample.exceptional_minus {
                minus_exc.pass
            } else {
                minus_gen.pass
            };
            let sigmas: Vec<(usize, SigmaMin)> = n_list
                .iter()
                .map(|&n| {
                    let section = section_from_parts(&sd.track, &sd.profile, s, n);
                    (n, min_singular_value(&section))
                })
                .collect();
            let verdict = cell_verdict(&sigmas, plus_ok, minus_ok);
            aggregate = match (aggregate, verdict) {
                (_, Verdict::LikelyNotInvertible) | (Verdict::LikelyNotInvertible, _) => {
                    Verdict::LikelyNotInvertible
                }
                (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
                _ => Verdict::LikelyInvertible,
            };
            cells.push(ProbeCell {
                s,
                sample: idx,
                sigmas,
                limit_plus: plus_ok,
                limit_minus: minus_ok,
                verdict,
            });
        }
        per_s.push((s, aggregate));
    }

    let (estimated, single_interval, findings) = summarize(&per_s);
    Ok(ProbeReport {
        s_grid: s_grid.to_vec(),
        n_list,
        convention,
        seed,
        samples,
        cells,
        per_s,
        estimated,
        single_interval,
        findings,
    })
}

fn summarize(per_s: &[(f64, Verdict)]) -> (SIntervalSet, bool, Vec<String>) {
    let step = if per_s.len() >= 2 {
        per_s[1].0 - per_s[0].0
    } else {
        0.0
    };
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut current: Option<(f64, f64)> = None;
    for (s, v) in per_s {
        if *v == Verdict::LikelyInvertible {
            current = match current {
                Some((a, _)) => Some((a, *s)),
                None => Some((*s, *s)),
            };
        } else if let Some(run) = current.take() {
            runs.push(run);
        }
    }
    if let Some(run) = current.take() {
        runs.push(run);
    }
    let estimated = SIntervalSet::from_raw(
        runs.iter()
            .map(|(a, b)| (a - 0.5 * step, b + 0.5 * step))
            .collect(),
    );
    let mut findings = Vec::new();
    let mut single = runs.len() <= 1;
    if runs.len() > 1 {
        // Classify the gaps between invertible runs.
        let mut hard_violation = false;
        let mut inconclusive_gap = false;
        for i in 0..per_s.len() {
            let (s, v) = per_s[i];
            let before = per_s[..i]
                .iter()
                .any(|(_, vv)| *vv == Verdict::LikelyInvertible);
            let after = per_s[i + 1..]
                .iter()
                .any(|(_, vv)| *vv == Verdict::LikelyInvertible);
            if before && after {
                match v {
                    Verdict::LikelyNotInvertible => {
                        hard_violation = true;
                        findings.push(format!(
                            "interval structure violated: non-invertible verdict at s = {s} \
                             lies between invertible cells (see the sigma table)"
                        ));
                    }
                    Verdict::Inconclusive => inconclusive_gap = true,
                    Verdict::LikelyInvertible => {}
                }
            }
        }
        if !hard_violation && inconclusive_gap {
            findings.push(
                "invertible runs are separated only by inconclusive cells; interval structure \
                 unresolved"
                    .into(),
            );
        }
        single = false;
    }
    (estimated, single, findings)
}
