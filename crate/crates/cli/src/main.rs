//! `gsr`: tables of GSR stopping-time distributions and their checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod grid;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gsr_core::distribution::{add0, arl, fmt_num, Curve, SurvivalSeries};
use gsr_core::montecarlo::{compare_curves, empirical_from_samples, simulate_all, thread_pool, SimConfig};
use gsr_core::spectrum::build_spectrum;
use gsr_core::{Error, ModelParams, Spectrum};
use rayon::prelude::*;

use grid::GridSpec;

const EXIT_USAGE: u8 = 2;
const EXIT_BRACKET: u8 = 3;
const EXIT_PRECONV: u8 = 4;
const EXIT_MOMENTS: u8 = 5;
const EXIT_MC: u8 = 6;

/// Relative tolerance of the moment check.
const MOMENT_TOL: f64 = 0.005;
const MIN_MC_PATHS: u64 = 100;

#[derive(Parser)]
#[command(name = "gsr", version, about = "Spectral first-passage tables for the Generalized Shiryaev-Roberts statistic")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find eigenvalues and series weights and write them as JSON.
    Spectrum(SpectrumArgs),
    /// Survival function P(S > t) over a headstart and time grid.
    Survival(CurveArgs),
    /// First-passage density over a headstart and time grid.
    Density(CurveArgs),
    /// Closed-form first moment against the series reconstruction.
    Moments(MomentArgs),
    /// Compare the analytic survival curve with an Euler-Maruyama simulation.
    ValidateMc(McArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Post-change drift (nonzero).
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Detection threshold A.
    #[arg(long)]
    threshold: Option<f64>,
    /// 0 for the pre-change regime, 1 for post-change.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    theta: Option<u8>,
    /// Number of eigenvalues to use.
    #[arg(long, default_value_t = 500)]
    modes: usize,
    /// Read a spectrum written by `gsr spectrum` instead of building one.
    #[arg(long)]
    spectrum: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Headstart value or inclusive range a:b:n; repeatable.
    #[arg(long, default_value = "0")]
    headstart: Vec<String>,
    /// Time grid min:max:n[:log].
    #[arg(long, default_value = "0:10:101")]
    tgrid: String,
    /// Emit values where the series has not converged instead of failing.
    #[arg(long)]
    allow_preconv: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct MomentArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Headstarts; defaults to 0, A/4, A/2, 3A/4.
    #[arg(long)]
    headstart: Vec<String>,
    /// Lower end of the series integral.
    #[arg(long, default_value_t = 1e-3)]
    tstar: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "0")]
    headstart: String,
    /// Time grid; defaults to 20 points on [0.1, 5 x mean].
    #[arg(long)]
    tgrid: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Censoring horizon; defaults to 10 x the closed-form mean.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) | Error::Domain(_) | Error::Regime => EXIT_USAGE,
            Error::BracketExhaustion { .. } => EXIT_BRACKET,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn load(model: &ModelArgs) -> Run<(ModelParams, Spectrum)> {
    if let Some(path) = &model.spectrum {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("--spectrum: {}: {e}", path.display())))?;
        let s = Spectrum::from_json(&text).map_err(|e| Failure::usage(format!("--spectrum: {e}")))?;
        let s = if model.modes < s.n_modes { s.truncated(model.modes) } else { s };
        return Ok((s.params, s));
    }
    let p = params(model)?;
    let s = build_spectrum(&p, model.modes)?;
    Ok((p, s))
}

fn params(model: &ModelArgs) -> Run<ModelParams> {
    let mu = model.mu.ok_or_else(|| Failure::usage("--mu is required without --spectrum"))?;
    let a = model.threshold.ok_or_else(|| Failure::usage("--threshold is required without --spectrum"))?;
    let theta = model.theta.ok_or_else(|| Failure::usage("--theta is required without --spectrum"))?;
    if mu == 0.0 || !mu.is_finite() {
        return Err(Failure::usage(format!("--mu must be finite and nonzero, got {mu}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Failure::usage(format!("--threshold must be positive, got {a}")));
    }
    if model.modes == 0 {
        return Err(Failure::usage("--modes must be at least 1"));
    }
    Ok(ModelParams::new(mu, a, theta)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Run<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure { code: 1, msg: format!("{}: {e}", path.display()) }),
        None => {
            let mut h = std::io::stdout().lock();
            h.write_all(text.as_bytes()).and_then(|_| h.flush()).map_err(|e| Failure { code: 1, msg: e.to_string() })
        }
    }
}

fn check_headstarts(p: &ModelParams, rs: &[f64]) -> Run<()> {
    for &r in rs {
        if !(r >= 0.0 && r <= p.a_threshold) {
            return Err(Failure::usage(format!("--headstart must lie in [0, {}], got {r}", p.a_threshold)));
        }
    }
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs) -> Run<()> {
    let (_, s) = load(&args.model)?;
    let mut json = s.to_json();
    json.push('\n');
    emit(&args.out, &json)?;
    eprintln!("residual_max {}", fmt_num(s.residual_max));
    match s.alpha0 {
        Some(a) => eprintln!("alpha0 present: {}", fmt_num(a)),
        None => eprintln!("alpha0 absent"),
    }
    Ok(())
}

fn cmd_curves(args: CurveArgs, density: bool) -> Run<()> {
    let (p, s) = load(&args.model)?;
    let rs = grid::headstarts(&args.headstart).map_err(Failure::usage)?;
    check_headstarts(&p, &rs)?;
    let mut ts = GridSpec::parse(&args.tgrid).map_err(Failure::usage)?.points().map_err(Failure::usage)?;
    if density && ts[0] == 0.0 {
        ts.remove(0);
        if ts.is_empty() {
            return Err(Failure::usage("--tgrid: density needs t > 0"));
        }
    }
    let pool = thread_pool()?;
    let curves: Vec<Curve> = pool.install(|| {
        rs.par_iter()
            .map(|&r| if density { Curve::density(&p, &s, r, &ts) } else { Curve::survival(&p, &s, r, &ts) })
            .collect::<gsr_core::Result<Vec<_>>>()
    })?;
    if !args.allow_preconv {
        for c in &curves {
            if let Some(i) = c.preconv.iter().position(|&b| b) {
                return Err(Failure {
                    code: EXIT_PRECONV,
                    msg: format!("series not converged at r = {}, t = {} (use --allow-preconv)", c.meta.r, c.grid[i]),
                });
            }
        }
    }
    let text = match args.out.format {
        Format::Csv => {
            let mut out = String::from("r,t,value,flag\n");
            for c in &curves {
                for i in 0..c.grid.len() {
                    out.push_str(&format!("{},{},{},{}\n", fmt_num(c.meta.r), fmt_num(c.grid[i]), fmt_num(c.values[i]), c.flag(i)));
                }
            }
            out
        }
        Format::Json => serde_json::to_string_pretty(&curves).expect("curves serialize") + "\n",
    };
    emit(&args.out.out, &text)
}

#[derive(serde::Serialize)]
struct MomentRow {
    r: f64,
    closed_form: f64,
    series_reconstruction: f64,
    rel_error: f64,
}

fn cmd_moments(args: MomentArgs) -> Run<()> {
    let (p, s) = load(&args.model)?;
    if !(args.tstar > 0.0 && args.tstar.is_finite()) {
        return Err(Failure::usage(format!("--tstar must be positive, got {}", args.tstar)));
    }
    let rs = if args.headstart.is_empty() {
        (0..4).map(|k| p.a_threshold * k as f64 / 4.0).collect()
    } else {
        grid::headstarts(&args.headstart).map_err(Failure::usage)?
    };
    check_headstarts(&p, &rs)?;
    let t_star = args.tstar;
    let pool = thread_pool()?;
    let rows: Vec<MomentRow> = pool.install(|| {
        rs.par_iter()
            .map(|&r| {
                let closed = if p.theta == 0 { arl(&p, r)? } else { add0(&p, r)? };
                let series = SurvivalSeries::new(&p, &s, r)?;
                let tail = series.moment(t_star)?.value;
                let head = series.survival(t_star)?.value;
                let recon = tail + t_star * head;
                let err = (recon - closed).abs() / closed.max(t_star);
                Ok(MomentRow {
                    r,
                    closed_form: closed,
                    series_reconstruction: recon,
                    rel_error: if err.is_nan() { f64::INFINITY } else { err },
                })
            })
            .collect::<gsr_core::Result<Vec<_>>>()
    })?;
    let pass = rows.iter().all(|r| r.rel_error <= MOMENT_TOL);
    let verdict = if pass { "PASS" } else { "FAIL" };
    let text = match args.out.format {
        Format::Csv => {
            let mut out = String::from("r,closed_form,series_reconstruction,rel_error\n");
            for row in &rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_num(row.r),
                    fmt_num(row.closed_form),
                    fmt_num(row.series_reconstruction),
                    fmt_num(row.rel_error)
                ));
            }
            out
        }
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Table<'a> {
                t_star: f64,
                tolerance: f64,
                rows: &'a [MomentRow],
                verdict: &'a str,
            }
            serde_json::to_string_pretty(&Table { t_star, tolerance: MOMENT_TOL, rows: &rows, verdict }).expect("table serializes") + "\n"
        }
    };
    emit(&args.out.out, &text)?;
    eprintln!("verdict {verdict}");
    if pass {
        Ok(())
    } else {
        Err(Failure { code: EXIT_MOMENTS, msg: format!("rel_error above {MOMENT_TOL} in at least one row") })
    }
}

fn cmd_validate_mc(args: McArgs) -> Run<()> {
    if args.paths < MIN_MC_PATHS {
        return Err(Failure::usage(format!("--paths must be at least {MIN_MC_PATHS}, got {}", args.paths)));
    }
    let (p, s) = load(&args.model)?;
    let r: f64 = args.headstart.trim().parse().map_err(|_| Failure::usage(format!("--headstart: cannot parse '{}'", args.headstart)))?;
    check_headstarts(&p, &[r])?;
    let mean = if p.theta == 0 { arl(&p, r)? } else { add0(&p, r)? };
    if mean > 1e3 {
        eprintln!("warning: mean passage time {} exceeds 1000 time units; the simulation will be slow", fmt_num(mean));
    }
    if r >= p.a_threshold {
        return Err(Failure::usage("--headstart must lie below the threshold for a comparison"));
    }
    let t_max = match args.tmax {
        Some(t) => t,
        None => SimConfig::default_t_max(&p, r)?,
    };
    let ts = match &args.tgrid {
        Some(g) => GridSpec::parse(g).map_err(Failure::usage)?.points().map_err(Failure::usage)?,
        None => GridSpec::linear(0.1, 5.0 * mean, 20).points().map_err(Failure::usage)?,
    };
    let cfg = SimConfig { params: p, r, dt: args.dt, n_paths: args.paths, t_max, seed: args.seed };
    cfg.validate()?;
    let analytic = Curve::survival(&p, &s, r, &ts)?;
    let samples = simulate_all(&cfg)?;
    let empirical = empirical_from_samples(&cfg, &samples, &ts)?;
    let report = compare_curves(&analytic, &empirical, cfg.dt)?;
    emit(&args.out, &(report.to_json() + "\n"))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_MC, msg: format!("{} of {} points outside the bands", report.n_outside_3se, report.n_grid) })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Spectrum(a) => cmd_spectrum(a),
        Cmd::Survival(a) => cmd_curves(a, false),
        Cmd::Density(a) => cmd_curves(a, true),
        Cmd::Moments(a) => cmd_moments(a),
        Cmd::ValidateMc(a) => cmd_validate_mc(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gsr: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
