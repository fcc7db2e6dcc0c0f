//! Command-line front end.
//!
//! Every subcommand reads a JSON configuration (surface, diffeomorphism,
//! optional operator, analysis defaults), applies flag overrides, and
//! writes CSV/JSON reports into the output directory.
//!
//! Exit codes: 0 success, 1 configuration or schema error, 2 the map failed
//! its admissibility validation, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{error::ErrorKind, CommandFactory, Parser, Subcommand};

use shiftop::config::{
    self, parse_coefficients, parse_n_range, parse_pair, parse_s_values, parse_section_sizes,
    Config, ConfigError,
};
use shiftop::dynamics::{
    find_fixed_points, limit_points, validate_morse_smale, Diffeo, DynamicsError,
    FixedPointRecord,
};
use shiftop::geometry::{Covector, SurfacePoint, Variance};
use shiftop::laurent::{annulus, invertible_s_set, is_invertible_constcoef, LaurentError};
use shiftop::registry::Registry;
use shiftop::report;
use shiftop::symbol::{ellipticity_probe, SymbolError};
use shiftop::weights::{
    invariant_direction, predicted_rates, weight_series, End, WeightConvention,
};

#[derive(Parser)]
#[command(
    name = "shiftop",
    version,
    about = "Weighted-shift symbol analysis for surface diffeomorphisms"
)]
struct Cli {
    /// JSON configuration file (required).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for all randomness; overrides the configuration value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the fixed-point eigenvalue conditions and scan for periodic points.
    Validate {
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        max_period: Option<usize>,
    },
    /// Locate and classify the fixed points.
    FixedPoints {
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Sample the weight sequence along one orbit and fit its rates.
    Weights {
        /// Single Sobolev exponent.
        #[arg(long)]
        s: Option<String>,
        /// Base point "x1,x2".
        #[arg(long)]
        x: Option<String>,
        /// Covector components "xi1,xi2".
        #[arg(long)]
        xi: Option<String>,
        /// Sample window "min:max".
        #[arg(long)]
        n_range: Option<String>,
        /// Weight convention: t1_pinned, func_pullback or density_forward.
        #[arg(long)]
        convention: Option<String>,
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Annulus radii over a list of exponents.
    Annulus {
        /// Exponents: list "0,1,2" or range "-5:5:0.25".
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Constant-coefficient invertibility: roots, annuli and the exact
    /// invertible-exponent intervals.
    ConstCoef {
        /// Coefficients "k:re[,im]" pairs, e.g. "0:1,1:-0.25".
        #[arg(long)]
        coeffs: Option<String>,
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Finite-section ellipticity probe of the configured operator.
    Probe {
        /// Exponent grid, e.g. "-3:5:0.25".
        #[arg(long)]
        s: Option<String>,
        /// Section half-widths, e.g. "256,512,1024".
        #[arg(long = "N")]
        section_sizes: Option<String>,
        /// Number of random base points.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        convention: Option<String>,
        #[arg(long)]
        grid_n: Option<usize>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        Failure::numerical(e.to_string())
    }
}

impl From<LaurentError> for Failure {
    fn from(e: LaurentError) -> Self {
        Failure::numerical(e.to_string())
    }
}

impl From<SymbolError> for Failure {
    fn from(e: SymbolError) -> Self {
        Failure::numerical(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

struct Context {
    config: Config,
    diffeo: Arc<dyn Diffeo>,
    out: PathBuf,
    seed: u64,
    timestamp: u64,
}

impl Context {
    fn new(cli_config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<Context, Failure> {
        let path = cli_config.ok_or_else(|| Failure::config("--config is required"))?;
        let config = Config::load(path)?;
        let registry = Registry::builtin();
        let surface = registry.build_surface(&config.surface)?;
        let diffeo = registry.build_diffeo(surface, &config.diffeo)?;
        std::fs::create_dir_all(out)
            .map_err(|e| Failure::config(format!("cannot create {}: {e}", out.display())))?;
        let seed = seed.unwrap_or(config.analysis.seed);
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Context {
            config,
            diffeo,
            out,
            seed,
            timestamp,
        }
        .with_out(out))
    }

    fn with_out(mut self, out: &Path) -> Context {
        self.out = out.to_path_buf();
        self
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Failure::numerical(format!("serialization: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn grid_n(&self, flag: Option<usize>) -> usize {
        flag.unwrap_or(self.config.analysis.grid_n)
    }

    fn convention(&self, flag: Option<&str>) -> Result<WeightConvention, Failure> {
        let name = flag.unwrap_or(&self.config.analysis.convention);
        Ok(Registry::convention(name)?)
    }

    /// Fixed points for analysis commands; the records must all pass the
    /// eigenvalue admissibility conditions.
    fn validated_fixed_points(&self, grid_n: usize) -> Result<Vec<FixedPointRecord>, Failure> {
        let fps = find_fixed_points(self.diffeo.as_ref(), grid_n, 1e-12)?;
        if fps.is_empty() {
            return Err(Failure::validation(
                "no fixed points found; the map does not satisfy the admissibility conditions",
            ));
        }
        if let Some(bad) = fps.iter().find(|fp| !fp.def1.ok) {
            return Err(Failure::validation(format!(
                "fixed point at chart {} ({}, {}) fails the eigenvalue conditions: {}",
                bad.point.chart,
                bad.point.coords.x,
                bad.point.coords.y,
                bad.def1.reasons.join("; ")
            )));
        }
        Ok(fps)
    }

    fn s_values(&self, flag: Option<&str>, default: &str) -> Result<Vec<f64>, Failure> {
        if let Some(text) = flag {
            return Ok(parse_s_values(text)?);
        }
        if let Some(sv) = &self.config.analysis.s {
            return Ok(sv.resolve()?);
        }
        Ok(parse_s_values(default)?)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Context::new(cli.config.as_deref(), &cli.out, cli.seed)?;
    match cli.command {
        Command::Validate { grid_n, max_period } => cmd_validate(&ctx, grid_n, max_period),
        Command::FixedPoints { grid_n } => cmd_fixed_points(&ctx, grid_n),
        Command::Weights {
            s,
            x,
            xi,
            n_range,
            convention,
            grid_n,
        } => cmd_weights(&ctx, s, x, xi, n_range, convention, grid_n),
        Command::Annulus { s, grid_n } => cmd_annulus(&ctx, s, grid_n),
        Command::ConstCoef { coeffs, s, grid_n } => cmd_const_coef(&ctx, coeffs, s, grid_n),
        Command::Probe {
            s,
            section_sizes,
            samples,
            convention,
            grid_n,
        } => cmd_probe(&ctx, s, section_sizes, samples, convention, grid_n),
    }
}

fn cmd_validate(
    ctx: &Context,
    grid_n: Option<usize>,
    max_period: Option<usize>,
) -> Result<(), Failure> {
    let grid_n = ctx.grid_n(grid_n);
    let max_period = max_period.unwrap_or(ctx.config.analysis.max_period);
    let report = validate_morse_smale(ctx.diffeo.as_ref(), grid_n, max_period)?;
    ctx.write(
        "fixed_points.csv",
        &report::fixed_points_csv(&report.fixed_points),
    )?;
    ctx.write_json(
        "validate.json",
        &report::validate_json(&ctx.diffeo.describe(), &report, ctx.timestamp),
    )?;
    println!(
        "{} fixed point(s); eigenvalue conditions {}; {} periodic violation(s)",
        report.fixed_points.len(),
        if report.def1_ok { "ok" } else { "FAILED" },
        report.periodic.violations.len()
    );
    if report.passed {
        Ok(())
    } else {
        Err(Failure::validation(
            "the map fails the admissibility conditions; see validate.json",
        ))
    }
}

fn cmd_fixed_points(ctx: &Context, grid_n: Option<usize>) -> Result<(), Failure> {
    let grid_n = ctx.grid_n(grid_n);
    let fps = find_fixed_points(ctx.diffeo.as_ref(), grid_n, 1e-12)?;
    ctx.write("fixed_points.csv", &report::fixed_points_csv(&fps))?;
    ctx.write_json(
        "fixed_points.json",
        &report::fixed_points_json(&ctx.diffeo.describe(), &fps, ctx.timestamp),
    )?;
    println!("{} fixed point(s)", fps.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_weights(
    ctx: &Context,
    s: Option<String>,
    x: Option<String>,
    xi: Option<String>,
    n_range: Option<String>,
    convention: Option<String>,
    grid_n: Option<usize>,
) -> Result<(), Failure> {
    let convention = ctx.convention(convention.as_deref())?;
    let fps = ctx.validated_fixed_points(ctx.grid_n(grid_n))?;

    let s_list = ctx.s_values(s.as_deref(), "0")?;
    if s_list.len() != 1 {
        return Err(Failure::config(
            "the weights command takes exactly one exponent",
        ));
    }
    let s = s_list[0];

    let (chart, coords) = match (&x, &ctx.config.analysis.x) {
        (Some(text), _) => (0, parse_pair(text, "base point")?),
        (None, Some(p)) => (p.chart(), p.coords()),
        (None, None) => return Err(Failure::config("weights needs a base point (--x)")),
    };
    let point = SurfacePoint::new(chart, coords[0], coords[1]);
    let xi_raw = match (&xi, &ctx.config.analysis.xi) {
        (Some(text), _) => parse_pair(text, "covector")?,
        (None, Some(v)) => *v,
        (None, None) => return Err(Failure::config("weights needs a covector (--xi)")),
    };
    let covector = Covector::covector(point, xi_raw[0], xi_raw[1])
        .map_err(|e| Failure::config(e.to_string()))?;
    let [n_min, n_max] = match (&n_range, &ctx.config.analysis.n_range) {
        (Some(text), _) => parse_n_range(text)?,
        (None, Some(r)) => *r,
        (None, None) => [-120, 120],
    };

    let series = weight_series(
        ctx.diffeo.as_ref(),
        &point,
        &covector,
        s,
        n_min,
        n_max,
        convention,
    )?;
    let lim = limit_points(ctx.diffeo.as_ref(), &fps, &point, 1e-9, 100_000)?;
    let predicted = predicted_rates(&fps[lim.plus], &fps[lim.minus], s);

    // Branch labels: exceptional when the raised covector lies on the
    // corresponding invariant line.
    let sharp = ctx.diffeo.surface().raise(&covector);
    let label = |end: End| -> Result<&'static str, Failure> {
        let e = invariant_direction(ctx.diffeo.as_ref(), &fps, &point, end)?;
        let cosine = (sharp.components.normalize().dot(&e.direction)).abs();
        Ok(if cosine.min(1.0).acos() < 1e-6 {
            "exceptional"
        } else {
            "generic"
        })
    };
    let branch_plus = label(End::Plus)?;
    let branch_minus = label(End::Minus)?;

    ctx.write("weights.csv", &report::weights_csv(&series))?;
    let sidecar = report::WeightsSidecar {
        diffeo: &ctx.diffeo.describe(),
        x: coords,
        chart,
        xi: xi_raw,
        series: &series,
        predicted: &predicted,
        branch_plus,
        branch_minus,
        limit_plus: lim.plus,
        limit_minus: lim.minus,
    };
    ctx.write_json("weights.json", &report::weights_json(&sidecar, ctx.timestamp))?;
    println!(
        "theta_plus = {:.6} ({}), theta_minus = {:.6} ({})",
        series.fit.theta_plus, branch_plus, series.fit.theta_minus, branch_minus
    );
    Ok(())
}

fn cmd_annulus(ctx: &Context, s: Option<String>, grid_n: Option<usize>) -> Result<(), Failure> {
    let fps = ctx.validated_fixed_points(ctx.grid_n(grid_n))?;
    let s_list = ctx.s_values(s.as_deref(), "-5:5:0.25")?;
    let rows: Vec<_> = s_list
        .iter()
        .map(|s| annulus(&fps, *s))
        .collect::<Result<_, _>>()?;
    ctx.write("annulus.csv", &report::annulus_csv(&rows))?;
    ctx.write_json(
        "annulus.json",
        &report::annulus_json(&ctx.diffeo.describe(), &fps, &rows, ctx.timestamp),
    )?;
    Ok(())
}

fn cmd_const_coef(
    ctx: &Context,
    coeffs: Option<String>,
    s: Option<String>,
    grid_n: Option<usize>,
) -> Result<(), Failure> {
    let fps = ctx.validated_fixed_points(ctx.grid_n(grid_n))?;
    let coeff_text = coeffs
        .or_else(|| ctx.config.analysis.coefficients.clone())
        .ok_or_else(|| Failure::config("const-coef needs coefficients (--coeffs)"))?;
    let pairs = parse_coefficients(&coeff_text)?;
    let p = config::coefficients_to_polynomial(&pairs);
    let roots = if p.is_zero() { Vec::new() } else { p.roots()? };
    let s_list = ctx.s_values(s.as_deref(), "-5:5:0.25")?;
    let rows = s_list
        .iter()
        .map(|s| {
            let ann = annulus(&fps, *s)?;
            let (ok, witness) = is_invertible_constcoef(&p, &fps, *s)?;
            Ok((ann, ok, witness))
        })
        .collect::<Result<Vec<_>, LaurentError>>()?;
    let intervals = invertible_s_set(&p, &fps)?;
    let input = report::ConstCoefReport {
        diffeo: &ctx.diffeo.describe(),
        polynomial: &p,
        roots: &roots,
        rows,
        intervals: &intervals,
    };
    ctx.write_json("const_coef.json", &report::const_coef_json(&input, ctx.timestamp))?;
    let printable: Vec<String> = intervals
        .intervals()
        .iter()
        .map(|(a, b)| format!("({a:.5}, {b:.5})"))
        .collect();
    println!("invertible exponents: {}", printable.join(" ∪ "));
    Ok(())
}

fn cmd_probe(
    ctx: &Context,
    s: Option<String>,
    section_sizes: Option<String>,
    samples: Option<usize>,
    convention: Option<String>,
    grid_n: Option<usize>,
) -> Result<(), Failure> {
    let convention = ctx.convention(convention.as_deref())?;
    let fps = ctx.validated_fixed_points(ctx.grid_n(grid_n))?;
    let op = ctx
        .config
        .operator
        .as_ref()
        .ok_or_else(|| Failure::config("probe needs an operator section in the configuration"))?
        .to_spec()?;
    let s_grid = ctx.s_values(s.as_deref(), "-3:5:0.25")?;
    let n_list = match section_sizes {
        Some(text) => parse_section_sizes(&text)?,
        None => ctx.config.analysis.section_sizes.clone(),
    };
    let sample_count = samples.unwrap_or(ctx.config.analysis.sample_count);
    let report_data = ellipticity_probe(
        &op,
        ctx.diffeo.as_ref(),
        &fps,
        &s_grid,
        sample_count,
        &n_list,
        ctx.seed,
        convention,
    )?;
    ctx.write("probe.csv", &report::probe_csv(&report_data))?;
    ctx.write_json(
        "probe.json",
        &report::probe_json(&ctx.diffeo.describe(), &report_data, ctx.timestamp),
    )?;
    for finding in &report_data.findings {
        println!("finding: {finding}");
    }
    println!(
        "estimated elliptic set: {:?} (single interval: {})",
        report_data.estimated.intervals(),
        report_data.single_interval
    );
    Ok(())
}
