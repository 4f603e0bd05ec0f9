//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or invalid
//! configuration, 3 numerical failure. `MODVAR_TOL` overrides the absolute
//! quadrature tolerance.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::aperture::{MomentumEvaluator, SlitConfig};
use crate::error::Error;
use crate::gridlab::{
    canonical_residual, commuting_residual, default_grid, sample_momentum, GridSpec,
    PeriodicGrid, PositionMultiplier, Resolution,
};
use crate::identities;
use crate::moments::{self, Moments, SweepRow};
use crate::quadrature::Integrator;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const TOL_ENV: &str = "MODVAR_TOL";

const UNITS: &str = "hbar = 1; lengths in input units; wavenumbers in inverse input units";

#[derive(Debug, Parser)]
#[command(name = "modvar", version, about = "Modular-variable uncertainty numerics for multislit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Standard deviations and uncertainty products for one slit configuration.
    Moments(MomentsArgs),
    /// Moments over a range of slit counts.
    Sweep(SweepArgs),
    /// Run the identity and invariant checks.
    Verify(VerifyArgs),
    /// Momentum intensity and its envelope on a uniform grid.
    FringeData(FringeArgs),
    /// Canonical commutator residual on a momentum grid.
    Commutator(CommutatorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SlitArgs {
    /// Slit separation T.
    #[arg(long)]
    pub separation: f64,
    /// Slit width a.
    #[arg(long)]
    pub width: f64,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Number of slits m (even).
    #[arg(long)]
    pub slits: u32,
    #[command(flatten)]
    pub slit: SlitArgs,
    /// Also report the refined operator with period 4 pi / (m T).
    #[arg(long)]
    pub refined: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub slit: SlitArgs,
    #[arg(long)]
    pub m_start: u32,
    #[arg(long)]
    pub m_end: u32,
    #[arg(long, default_value_t = 2)]
    pub step: u32,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run a single suite.
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    ProductSum,
    Dirichlet,
    SincComb,
    Convolution,
    FringeIntegrals,
    RiemannLebesgue,
    FourierCoefficients,
    Moments,
    Robertson,
    Commutator,
    Commuting,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::ProductSum => "product-sum",
            Suite::Dirichlet => "dirichlet",
            Suite::SincComb => "sinc-comb",
            Suite::Convolution => "convolution",
            Suite::FringeIntegrals => "fringe-integrals",
            Suite::RiemannLebesgue => "riemann-lebesgue",
            Suite::FourierCoefficients => "fourier-coefficients",
            Suite::Moments => "moments",
            Suite::Robertson => "robertson",
            Suite::Commutator => "commutator",
            Suite::Commuting => "commuting",
        }
    }
}

#[derive(Debug, Args)]
pub struct FringeArgs {
    /// Number of slits m (a power of two).
    #[arg(long)]
    pub slits: u32,
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    /// Wavenumber range as `min,max`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub k_range: (f64, f64),
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CommutatorArgs {
    /// `psi-<m>` for an m-slit state, or `single-slit`.
    #[arg(long)]
    pub state: String,
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, value_enum, default_value = "fine")]
    pub resolution: Resolution,
    /// Use the refined period 4 pi / (m T) instead of 2 pi / T.
    #[arg(long)]
    pub refined: bool,
    /// Explicit grid range `min,max`; overrides the default aligned grid.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true, requires = "points")]
    pub k_range: Option<(f64, f64)>,
    #[arg(long, requires = "k_range")]
    pub points: Option<usize>,
    /// Write `k,abs_residual` to this CSV file.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `min,max`, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad minimum: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad maximum: {e}"))?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(format!("range must satisfy min < max, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        usage(format!("i/o error: {e}"))
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` and runs the command, returning the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    let result = tolerance().and_then(|tol| dispatch(cli.command, tol, stdout, stderr));
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn tolerance() -> std::result::Result<f64, Failure> {
    match std::env::var(TOL_ENV) {
        Err(_) => Ok(Integrator::default().abs_tol),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(usage(format!("{TOL_ENV} must be a positive number, got `{s}`"))),
        },
    }
}

fn dispatch(command: Command, tol: f64, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let engine = Moments::with_tol(tol);
    match command {
        Command::Moments(a) => cmd_moments(&a, &engine, stdout),
        Command::Sweep(a) => cmd_sweep(&a, &engine, stdout),
        Command::Verify(a) => cmd_verify(&a, &engine, stdout, stderr),
        Command::FringeData(a) => cmd_fringe_data(&a, stdout),
        Command::Commutator(a) => cmd_commutator(&a, stdout),
    }
}

fn with_output<F>(path: &Option<PathBuf>, stdout: &mut dyn Write, body: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()
        }
        None => body(stdout),
    }
}

fn write_json(w: &mut dyn Write, doc: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, doc)?;
    writeln!(w)
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn cmd_moments(args: &MomentsArgs, engine: &Moments, stdout: &mut dyn Write) -> CmdResult {
    let config = SlitConfig::new(args.slit.width, args.slit.separation, args.slits)?;
    let qt = moments::sdev_qt(&config);
    let pm = engine.sdev_pmod_single_fringe(&config)?;
    let refined = args.refined.then(|| moments::sdev_pmod_refined(&config));
    let product = qt.value * pm.value;
    let product_refined = refined.map(|r| qt.value * r.value);
    with_output(&args.output, stdout, |w| match args.format {
        Format::Json => write_json(
            w,
            &json!({
                "command": "moments",
                "input": {
                    "slits": args.slits,
                    "separation": args.slit.separation,
                    "width": args.slit.width,
                    "refined": args.refined,
                    "quadrature_tol": engine.integrator.abs_tol,
                },
                "units": UNITS,
                "m": args.slits,
                "T": args.slit.separation,
                "a": args.slit.width,
                "sdev_qt": qt.value,
                "sdev_pmod": pm.value,
                "sdev_pmod_refined": refined.map(|r| r.value),
                "product": product,
                "product_refined": product_refined,
                "methods": {
                    "sdev_qt": qt.method,
                    "sdev_pmod": pm.method,
                    "sdev_pmod_refined": refined.map(|r| r.method),
                },
                "error_estimates": {
                    "sdev_qt": qt.abs_error_estimate,
                    "sdev_pmod": pm.abs_error_estimate,
                    "sdev_pmod_refined": refined.map(|r| r.abs_error_estimate),
                },
            }),
        ),
        Format::Csv => {
            writeln!(w, "m,T,a,sdev_qt,sdev_pmod,sdev_pmod_refined,product,product_refined")?;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                args.slits,
                fmt(args.slit.separation),
                fmt(args.slit.width),
                fmt(qt.value),
                fmt(pm.value),
                fmt_opt(refined.map(|r| r.value)),
                fmt(product),
                fmt_opt(product_refined)
            )
        }
    })?;
    Ok(EXIT_OK)
}

pub fn cmd_sweep(args: &SweepArgs, engine: &Moments, stdout: &mut dyn Write) -> CmdResult {
    let SweepArgs {
        m_start, m_end, step, ..
    } = *args;
    if [m_start, m_end, step].iter().any(|v| !v.is_multiple_of(2)) {
        return Err(usage(format!(
            "slit count must be even: got --m-start {m_start} --m-end {m_end} --step {step}"
        )));
    }
    if step == 0 || m_start < 2 || m_end < m_start {
        return Err(usage(format!(
            "need 2 <= m-start <= m-end and step > 0, got {m_start}..{m_end} step {step}"
        )));
    }
    let ms: Vec<u32> = (m_start..=m_end).step_by(step as usize).collect();
    let rows = engine.sweep(args.slit.separation, args.slit.width, &ms)?;
    with_output(&args.output, stdout, |w| match args.format {
        Format::Csv => write_sweep_csv(w, &rows),
        Format::Json => write_json(
            w,
            &json!({
                "command": "sweep",
                "input": {
                    "separation": args.slit.separation,
                    "width": args.slit.width,
                    "m_start": m_start,
                    "m_end": m_end,
                    "step": step,
                    "quadrature_tol": engine.integrator.abs_tol,
                },
                "units": UNITS,
                "rows": rows,
            }),
        ),
    })?;
    Ok(EXIT_OK)
}

pub fn write_sweep_csv(w: &mut dyn Write, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "m,sdev_qt,sdev_pmod,sdev_pmod_refined,product,product_refined")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.m,
            fmt(r.sdev_qt),
            fmt(r.sdev_pmod),
            fmt(r.sdev_pmod_refined),
            fmt(r.product),
            fmt(r.product_refined)
        )?;
    }
    Ok(())
}

fn is_power_of_two(m: u32) -> bool {
    m >= 2 && m.is_power_of_two()
}

pub fn cmd_fringe_data(args: &FringeArgs, stdout: &mut dyn Write) -> CmdResult {
    let config = SlitConfig::new(args.width, args.separation, args.slits)?;
    if !is_power_of_two(args.slits) {
        return Err(usage(format!(
            "fringe-data needs a power-of-two slit count, got {}",
            args.slits
        )));
    }
    if args.points < 2 {
        return Err(usage("need at least 2 points"));
    }
    let state = MomentumEvaluator::sum(&config);
    let envelope = if args.slits == 2 {
        MomentumEvaluator::single_slit(args.width, args.separation)?
    } else {
        MomentumEvaluator::sum(&config.with_slits(args.slits / 2)?)
    };
    let (lo, hi) = args.k_range;
    let h = (hi - lo) / (args.points - 1) as f64;
    with_output(&args.output, stdout, |w| {
        writeln!(w, "k,intensity,envelope_intensity")?;
        for i in 0..args.points {
            let k = if i + 1 == args.points { hi } else { lo + h * i as f64 };
            let psi = state.eval(k);
            let env = envelope.eval(k);
            writeln!(w, "{},{},{}", fmt(k), fmt(psi * psi), fmt(2.0 * env * env))?;
        }
        Ok(())
    })?;
    Ok(EXIT_OK)
}

fn parse_state(s: &str, width: f64, separation: f64) -> std::result::Result<MomentumEvaluator, Failure> {
    if s == "single-slit" {
        return Ok(MomentumEvaluator::single_slit(width, separation)?);
    }
    let m: u32 = s
        .strip_prefix("psi-")
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| usage(format!("state must be `psi-<m>` or `single-slit`, got `{s}`")))?;
    Ok(MomentumEvaluator::sum(&SlitConfig::new(width, separation, m)?))
}

pub fn cmd_commutator(args: &CommutatorArgs, stdout: &mut dyn Write) -> CmdResult {
    let evaluator = parse_state(&args.state, args.width, args.separation)?;
    let period = if args.refined {
        if evaluator.slits() < 2 {
            return Err(usage("--refined needs an m-slit state"));
        }
        evaluator.fringe_period() * 2.0 / evaluator.slits() as f64
    } else {
        evaluator.fringe_period()
    };
    let grid = match (args.k_range, args.points) {
        (Some((k_min, k_max)), Some(n_points)) => GridSpec {
            k_min,
            k_max,
            n_points,
        },
        _ => default_grid(&evaluator, args.resolution)?,
    };
    let state = sample_momentum(&evaluator, &grid)?;
    let report = canonical_residual(&state, period)?;
    if let Some(path) = &args.profile {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "k,abs_residual")?;
        for (i, r) in report.residual_profile.iter().enumerate() {
            writeln!(w, "{},{}", fmt(state.k(i)), fmt(*r))?;
        }
        w.flush()?;
    }
    write_json(
        stdout,
        &json!({
            "command": "commutator",
            "input": {
                "state": args.state,
                "separation": args.separation,
                "width": args.width,
                "resolution": args.resolution,
                "refined": args.refined,
                "grid": grid,
            },
            "units": UNITS,
            "period": period,
            "dk": state.dk,
            "l2_residual": report.l2_residual,
            "comb_alignment_score": report.comb_alignment_score,
            "comb_locations": report.comb_locations,
            "profile": args.profile,
        }),
    )?;
    Ok(EXIT_OK)
}

/// One verification check.
#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

fn check(suite: Suite, name: impl Into<String>, passed: bool, detail: Value) -> Check {
    Check {
        suite: suite.name(),
        name: name.into(),
        passed,
        detail,
    }
}

fn identity_check(suite: Suite, r: identities::IdentityReport) -> Check {
    let passed = r.passed;
    let name = r.name.clone();
    check(suite, name, passed, serde_json::to_value(r).unwrap_or(Value::Null))
}

/// A check whose computation itself failed.
fn errored(suite: Suite, name: &str, e: Error) -> Check {
    check(suite, name, false, json!({ "error": e.to_string() }))
}

fn run_suite(suite: Suite, engine: &Moments) -> Vec<Check> {
    let mut out = Vec::new();
    let integrator = &engine.integrator;
    match suite {
        Suite::ProductSum => {
            for d in 1..=6 {
                match identities::check_product_sum(d, 10_000) {
                    Ok(mut r) => {
                        r.name = format!("product_sum_d{d}");
                        out.push(identity_check(suite, r));
                    }
                    Err(e) => out.push(errored(suite, "product_sum", e)),
                }
            }
        }
        Suite::Dirichlet => {
            for m in [2u32, 4, 8, 40] {
                let mut worst: f64 = 0.0;
                let mut samples = 0;
                for i in 1..2000 {
                    let kappa = -PI + 2.0 * PI * i as f64 / 2000.0;
                    if let Ok(f) = identities::dirichlet_square(m, kappa) {
                        worst = worst.max(f.max_deviation() / f.lhs.max(1.0));
                        samples += 1;
                    }
                }
                out.push(check(
                    suite,
                    format!("dirichlet_square_m{m}"),
                    worst <= 1e-10,
                    json!({ "max_rel_deviation": worst, "samples": samples, "tolerance": 1e-10 }),
                ));
            }
        }
        Suite::SincComb => {
            let (a, t) = (1.0, 5.0);
            let vals: Vec<_> = [0.0, 0.3, 1.2]
                .iter()
                .map(|&u| identities::sinc_comb_partial(a, t, u, 100_000))
                .collect();
            match vals.into_iter().collect::<Result<Vec<f64>, _>>() {
                Ok(v) => {
                    let dev = v.iter().map(|x| (x - t / a).abs()).fold(0.0, f64::max);
                    out.push(check(
                        suite,
                        "sinc_comb_limit",
                        dev <= 1e-3,
                        json!({ "values": v, "target": t / a, "max_abs_deviation": dev, "tolerance": 1e-3 }),
                    ));
                }
                Err(e) => out.push(errored(suite, "sinc_comb_limit", e)),
            }
            let e1 = identities::sinc_comb_partial(a, t, 0.3, 1_000).map(|v| (v - t / a).abs());
            let e2 = identities::sinc_comb_partial(a, t, 0.3, 10_000).map(|v| (v - t / a).abs());
            match (e1, e2) {
                (Ok(e1), Ok(e2)) => {
                    let ratio = e1 / e2;
                    out.push(check(
                        suite,
                        "sinc_comb_tail_order",
                        (5.0..20.0).contains(&ratio),
                        json!({ "tail_1e3": e1, "tail_1e4": e2, "ratio": ratio }),
                    ));
                }
                (Err(e), _) | (_, Err(e)) => out.push(errored(suite, "sinc_comb_tail_order", e)),
            }
        }
        Suite::Convolution => {
            for d in 1..=8 {
                match identities::convolution_construction(d) {
                    Ok(c) => out.push(check(
                        suite,
                        format!("convolution_d{d}"),
                        c.centers_match && c.transform.passed,
                        json!({ "levels": c.levels, "centers_match": c.centers_match, "transform": c.transform }),
                    )),
                    Err(e) => out.push(errored(suite, "convolution", e)),
                }
            }
        }
        Suite::FringeIntegrals => match identities::fringe_integrals(integrator) {
            Ok(f) => {
                let d1 = (f.log_integral - f.log_exact).abs();
                let d2 = (f.cos2_integral - f.cos2_exact).abs();
                out.push(check(suite, "log_integral", d1 <= 1e-10, json!({ "value": f.log_integral, "exact": f.log_exact, "deviation": d1 })));
                out.push(check(suite, "cos2_integral", d2 <= 1e-10, json!({ "value": f.cos2_integral, "exact": f.cos2_exact, "deviation": d2 })));
            }
            Err(e) => out.push(errored(suite, "fringe_integrals", e)),
        },
        Suite::RiemannLebesgue => {
            match (
                identities::riemann_lebesgue(integrator, 20),
                identities::riemann_lebesgue(integrator, 200),
            ) {
                (Ok(v20), Ok(v200)) => out.push(check(
                    suite,
                    "riemann_lebesgue_decay",
                    v200.abs() < 0.01 && v200.abs() < v20.abs(),
                    json!({ "m20": v20, "m200": v200 }),
                )),
                (Err(e), _) | (_, Err(e)) => out.push(errored(suite, "riemann_lebesgue_decay", e)),
            }
        }
        Suite::FourierCoefficients => {
            for d in 1..=6u32 {
                let half = 1u32 << (d - 1);
                match identities::product_form_coefficients(d, 2 * half) {
                    Ok(c) => {
                        let dev = c
                            .iter()
                            .enumerate()
                            .map(|(n, v)| (v - if (n as u32) < half { 1.0 } else { 0.0 }).abs())
                            .fold(0.0, f64::max);
                        out.push(check(suite, format!("coefficients_d{d}"), dev <= 1e-10, json!({ "coefficients": c, "max_abs_deviation": dev })));
                    }
                    Err(e) => out.push(errored(suite, "coefficients", e)),
                }
            }
        }
        Suite::Moments => out.extend(moment_checks(engine)),
        Suite::Robertson => {
            let ms: Vec<u32> = (2..=200).step_by(2).collect();
            for t in [1.0, 5.0, 10.0] {
                match engine.sweep(t, 0.2 * t, &ms) {
                    Ok(rows) => {
                        let min = rows
                            .iter()
                            .flat_map(|r| [r.product, r.product_refined])
                            .fold(f64::INFINITY, f64::min);
                        out.push(check(suite, format!("robertson_T{t}"), min >= 0.5 - 1e-9, json!({ "min_product": min })));
                    }
                    Err(e) => out.push(errored(suite, "robertson", e)),
                }
            }
        }
        Suite::Commutator => {
            let cases = [("psi-2", 2u32), ("psi-4", 4), ("psi-8", 8), ("single-slit", 0)];
            for (name, m) in cases {
                let ev = if m == 0 {
                    MomentumEvaluator::single_slit(1.0, 5.0)
                } else {
                    SlitConfig::new(1.0, 5.0, m).map(|c| MomentumEvaluator::sum(&c))
                };
                let report = ev.and_then(|ev| {
                    let grid = default_grid(&ev, Resolution::Fine)?;
                    canonical_residual(&sample_momentum(&ev, &grid)?, ev.fringe_period())
                });
                match report {
                    Ok(r) => {
                        let passed = if m == 0 {
                            r.l2_residual >= 0.1 && r.comb_alignment_score >= 0.9
                        } else {
                            r.l2_residual <= 1e-3
                        };
                        out.push(check(
                            suite,
                            format!("canonical_{name}"),
                            passed,
                            json!({ "l2_residual": r.l2_residual, "comb_alignment_score": r.comb_alignment_score, "comb_locations": r.comb_locations.len() }),
                        ));
                    }
                    Err(e) => out.push(errored(suite, name, e)),
                }
            }
        }
        Suite::Commuting => {
            let grid = PeriodicGrid {
                periods: 16,
                n_points: 1 << 14,
            };
            let r = SlitConfig::new(1.0, 5.0, 2).and_then(|c| {
                Ok((
                    commuting_residual(&c, grid, PositionMultiplier::Modular)?,
                    commuting_residual(&c, grid, PositionMultiplier::Full)?,
                ))
            });
            match r {
                Ok((modular, full)) => {
                    out.push(check(suite, "qmod_pmod", modular <= 1e-2, json!({ "residual": modular })));
                    out.push(check(suite, "q_pmod_contrast", full > 0.1, json!({ "residual": full })));
                }
                Err(e) => out.push(errored(suite, "commuting", e)),
            }
        }
    }
    out
}

fn moment_checks(engine: &Moments) -> Vec<Check> {
    let suite = Suite::Moments;
    let mut out = Vec::new();
    let exact = moments::double_slit_product();
    let run = || -> crate::error::Result<Vec<Check>> {
        let c2 = SlitConfig::new(1.0, 5.0, 2)?;
        let qt = moments::sdev_qt(&c2).value;
        let sf = engine.sdev_pmod_single_fringe(&c2)?.value * qt;
        let bf = engine.sdev_pmod_bruteforce(&c2, 2e-7)?.value * qt;
        let mut checks = vec![check(
            suite,
            "double_slit_product",
            (sf - exact).abs() <= 1e-6 && (bf - exact).abs() <= 1e-6,
            json!({ "single_fringe": sf, "brute_force": bf, "exact": exact }),
        )];
        let mut worst: f64 = 0.0;
        for m in [2u32, 4, 6, 8, 12, 20, 50, 100, 200] {
            let c = SlitConfig::new(1.0, 5.0, m)?;
            let q = engine.sdev_pmod_refined_quadrature(&c)?.value * moments::sdev_qt(&c).value;
            worst = worst.max((q - moments::refined_product_closed(m)).abs());
        }
        checks.push(check(suite, "refined_product_closed_form", worst <= 1e-8, json!({ "max_abs_deviation": worst })));
        let base = engine.sdev_pmod_bruteforce(&SlitConfig::new(2.5, 5.0, 2)?, 2e-7)?.value;
        let mut spread: f64 = 0.0;
        for a in [0.5, 4.5] {
            let v = engine.sdev_pmod_bruteforce(&SlitConfig::new(a, 5.0, 2)?, 2e-7)?.value;
            spread = spread.max((v - base).abs() / base);
        }
        checks.push(check(suite, "width_independence", spread <= 1e-6, json!({ "max_rel_spread": spread })));
        Ok(checks)
    };
    match run() {
        Ok(c) => out.extend(c),
        Err(e) => out.push(errored(suite, "moments", e)),
    }
    out
}

pub const ALL_SUITES: [Suite; 11] = [
    Suite::ProductSum,
    Suite::Dirichlet,
    Suite::SincComb,
    Suite::Convolution,
    Suite::FringeIntegrals,
    Suite::RiemannLebesgue,
    Suite::FourierCoefficients,
    Suite::Moments,
    Suite::Robertson,
    Suite::Commutator,
    Suite::Commuting,
];

pub fn cmd_verify(
    args: &VerifyArgs,
    engine: &Moments,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let suites: Vec<Suite> = match args.suite {
        Some(s) => vec![s],
        None => ALL_SUITES.to_vec(),
    };
    let checks: Vec<Check> = suites.iter().flat_map(|&s| run_suite(s, engine)).collect();
    let all_passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        writeln!(
            stderr,
            "{} {}/{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name
        )?;
    }
    writeln!(
        stderr,
        "{} of {} checks passed",
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    )?;
    write_json(
        stdout,
        &json!({
            "command": "verify",
            "input": {
                "suite": args.suite.map(Suite::name),
                "quadrature_tol": engine.integrator.abs_tol,
            },
            "units": UNITS,
            "passed": all_passed,
            "checks": checks.iter().map(|c| json!({
                "suite": c.suite,
                "name": c.name,
                "passed": c.passed,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        }),
    )?;
    Ok(if all_passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
