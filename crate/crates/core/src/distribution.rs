//! Survival functions, time-densities, transition density, eigenfunctions
//! and first moments of the GSR stopping time.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::{exp_e1, whittaker_w_exp_scaled};
use crate::spectrum::{ModelParams, Root, Spectrum};

/// Headstarts below this fraction of A are evaluated at it.
pub const R_MIN_FRACTION: f64 = 1e-8;

/// A term below this fraction of the running sum (three times in a row)
/// ends the series.
const TERM_STOP: f64 = 1e-16;

/// The last included term above this fraction of the sum marks the value as
/// not yet converged.
const PRECONV_RATIO: f64 = 1e-10;

pub fn speed_measure(x: f64, params: &ModelParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("speed measure needs x > 0, got {x}")));
    }
    let mu2 = params.mu2();
    let ln = (2.0 / (mu2 * x * x)).ln() + 2.0 * params.theta as f64 * x.ln() - 2.0 / (mu2 * x);
    Ok(ln.exp())
}

pub fn scale_measure(x: f64, params: &ModelParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("scale measure needs x > 0, got {x}")));
    }
    let ln = -2.0 * params.theta as f64 * x.ln() + 2.0 / (params.mu2() * x);
    Ok(ln.exp())
}

fn second_index(root: Root) -> Complex64 {
    match root {
        Root::Alpha(a) => Complex64::new(a / 2.0, 0.0),
        Root::Beta(b) => Complex64::new(0.0, b / 2.0),
    }
}

/// (ln|e^{u/2} W(u)|, sign) for the real Whittaker function of a mode.
fn mode_w(params: &ModelParams, root: Root, u: f64) -> Result<(f64, f64)> {
    let w = whittaker_w_exp_scaled(params.first_index(), second_index(root), u)?;
    Ok((w.ln_abs(), w.mant.re.signum()))
}

fn check_state(params: &ModelParams, x: f64, what: &str) -> Result<()> {
    if !(x >= 0.0 && x <= params.a_threshold) {
        return Err(Error::Domain(format!("{what} must lie in [0, A], got {x}")));
    }
    Ok(())
}

fn check_spectrum(params: &ModelParams, spectrum: &Spectrum) -> Result<()> {
    let sp = &spectrum.params;
    if sp.mu2() != params.mu2() || sp.a_threshold != params.a_threshold || sp.theta != params.theta {
        return Err(Error::InvalidParams("spectrum was built for different parameters".into()));
    }
    Ok(())
}

/// Normalized eigenfunction of `spectrum.roots()[index]` at x in (0, A].
pub fn eigenfunction(params: &ModelParams, spectrum: &Spectrum, index: usize, x: f64) -> Result<f64> {
    check_spectrum(params, spectrum)?;
    if !(x > 0.0 && x <= params.a_threshold) {
        return Err(Error::Domain(format!("eigenfunction needs x in (0, A], got {x}")));
    }
    let roots = spectrum.roots();
    let root = *roots.get(index).ok_or_else(|| Error::Domain(format!("no mode {index}")))?;
    let theta = params.theta as f64;
    let ln_c = 0.5 * (2.0 * theta * (params.mu2() / 2.0).ln() + spectrum.weights_density_norm[index]);
    let u = params.u_of(x);
    let (lw, sw) = mode_w(params, root, u)?;
    Ok(sw * (ln_c + (theta - 1.0) * u.ln() + lw).exp())
}

/// Result of one truncated series evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesEval {
    /// Clamped value.
    pub value: f64,
    /// Sum before clamping.
    pub raw: f64,
    /// |last included term| / max(|sum|, 1e-6).
    pub last_ratio: f64,
    pub terms_used: usize,
}

impl SeriesEval {
    pub fn converged(&self) -> bool {
        self.last_ratio <= PRECONV_RATIO
    }
}

fn exact(v: f64) -> SeriesEval {
    SeriesEval { value: v, raw: v, last_ratio: 0.0, terms_used: 0 }
}

/// The survival series at one headstart with the time-independent part of
/// every term precomputed, so a whole time grid costs one pass per t.
#[derive(Clone, Debug)]
pub struct SurvivalSeries {
    rates: Vec<f64>,
    ln_mag: Vec<f64>,
    sign: Vec<f64>,
    /// Headstart at the threshold: the process stops immediately.
    at_threshold: bool,
}

impl SurvivalSeries {
    pub fn new(params: &ModelParams, spectrum: &Spectrum, r: f64) -> Result<Self> {
        check_state(params, r, "headstart")?;
        Self::at(params, spectrum, r.max(params.a_threshold * R_MIN_FRACTION))
    }

    /// As [`SurvivalSeries::new`] but without the floor at A * 1e-8.
    pub fn at(params: &ModelParams, spectrum: &Spectrum, y: f64) -> Result<Self> {
        check_spectrum(params, spectrum)?;
        if !(y > 0.0 && y <= params.a_threshold) {
            return Err(Error::Domain(format!("headstart must lie in (0, A], got {y}")));
        }
        let a = params.a_threshold;
        let r = y;
        let u = params.u_of(y);
        let z = params.z_threshold();
        let mut pre = -z / 2.0;
        if params.theta == 0 {
            pre += (y / a).ln();
        }
        let roots = spectrum.roots();
        let mut rates = Vec::with_capacity(roots.len());
        let mut ln_mag = Vec::with_capacity(roots.len());
        let mut sign = Vec::with_capacity(roots.len());
        for (root, &c) in roots.iter().zip(&spectrum.weights_survival) {
            let (lw, sw) = mode_w(params, *root, u)?;
            rates.push(root.rate(params));
            ln_mag.push(pre + c.abs().ln() + lw);
            sign.push(sw * c.signum());
        }
        Ok(SurvivalSeries { rates, ln_mag, sign, at_threshold: r >= a })
    }

    /// A series with the given (term coefficient, decay rate) pairs, i.e.
    /// S(t) = sum c_k exp(-rate_k t).
    pub fn from_terms(terms: &[(f64, f64)]) -> Self {
        SurvivalSeries {
            rates: terms.iter().map(|t| t.1).collect(),
            ln_mag: terms.iter().map(|t| t.0.abs().ln()).collect(),
            sign: terms.iter().map(|t| t.0.signum()).collect(),
            at_threshold: false,
        }
    }

    fn sum(&self, extra: impl Fn(f64) -> f64) -> SeriesEval {
        let mut sum = 0.0;
        let mut comp = 0.0;
        let mut last = 0.0;
        let mut small = 0;
        let mut used = 0;
        for k in 0..self.rates.len() {
            let term = self.sign[k] * (self.ln_mag[k] + extra(self.rates[k])).exp();
            let y = term - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
            last = term;
            used = k + 1;
            if term.abs() < TERM_STOP * sum.abs() {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        let last_ratio = if sum.is_finite() { last.abs() / sum.abs().max(1e-6) } else { f64::INFINITY };
        SeriesEval { value: sum, raw: sum, last_ratio, terms_used: used }
    }

    pub fn survival(&self, t: f64) -> Result<SeriesEval> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(exact(1.0));
        }
        if self.at_threshold {
            return Ok(exact(0.0));
        }
        let mut e = self.sum(|rate| -rate * t);
        e.value = if e.raw.is_finite() { e.raw.clamp(0.0, 1.0) } else { f64::NAN };
        Ok(e)
    }

    pub fn density(&self, t: f64) -> Result<SeriesEval> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("density needs t > 0, got {t}")));
        }
        if self.at_threshold {
            return Ok(exact(0.0));
        }
        let mut e = self.sum(|rate| rate.ln() - rate * t);
        e.value = if e.raw.is_finite() { e.raw.max(0.0) } else { f64::NAN };
        Ok(e)
    }

    /// Term-wise integral of the survival series over [t_star, inf).
    pub fn moment(&self, t_star: f64) -> Result<SeriesEval> {
        if !(t_star > 0.0) {
            return Err(Error::Domain(format!("t_star must be positive, got {t_star}")));
        }
        if self.at_threshold {
            return Ok(exact(0.0));
        }
        Ok(self.sum(|rate| -rate.ln() - rate * t_star))
    }
}

pub fn survival(params: &ModelParams, spectrum: &Spectrum, r: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        check_state(params, r, "headstart")?;
        return Ok(1.0);
    }
    Ok(SurvivalSeries::new(params, spectrum, r)?.survival(t)?.value)
}

pub fn density(params: &ModelParams, spectrum: &Spectrum, r: f64, t: f64) -> Result<f64> {
    Ok(SurvivalSeries::new(params, spectrum, r)?.density(t)?.value)
}

/// Series part of the first moment, missing the integral over [0, t_star).
pub fn moment_from_survival(params: &ModelParams, spectrum: &Spectrum, r: f64, t_star: f64) -> Result<f64> {
    Ok(SurvivalSeries::new(params, spectrum, r)?.moment(t_star)?.value)
}

/// Lower estimate t_star * S(r, t_star) of the missing integral over
/// [0, t_star); the true value lies between it and t_star.
pub fn moment_bias(params: &ModelParams, spectrum: &Spectrum, r: f64, t_star: f64) -> Result<f64> {
    let s = SurvivalSeries::new(params, spectrum, r)?.survival(t_star)?;
    Ok(t_star * if s.value.is_finite() { s.value } else { 1.0 })
}

/// E_inf of the stopping time: A - r.
pub fn arl(params: &ModelParams, r: f64) -> Result<f64> {
    check_state(params, r, "headstart")?;
    Ok(params.a_threshold - r)
}

/// E_0 of the stopping time in closed form through the exponential integral.
pub fn add0(params: &ModelParams, r: f64) -> Result<f64> {
    check_state(params, r, "headstart")?;
    let mu2 = params.mu2();
    let z = params.z_threshold();
    let far = exp_e1(z)?;
    let near = if r > 0.0 { exp_e1(params.u_of(r))? } else { 0.0 };
    Ok(2.0 / mu2 * (far - near))
}

/// Transition density p(x, t | r) of the killed process.
pub fn transition_density(params: &ModelParams, spectrum: &Spectrum, x: f64, t: f64, r: f64) -> Result<f64> {
    TransitionKernel::new(params, spectrum, r)?.eval(x, t).map(|e| e.value)
}

/// Transition density from a fixed start r, with the r-dependent factors of
/// every mode cached.
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    params: ModelParams,
    roots: Vec<Root>,
    /// ln C~^2 + ln|e^{u_r/2} W(u_r)| per mode, and its sign.
    ln_mag: Vec<f64>,
    sign: Vec<f64>,
    r: f64,
}

impl TransitionKernel {
    pub fn new(params: &ModelParams, spectrum: &Spectrum, r: f64) -> Result<Self> {
        check_spectrum(params, spectrum)?;
        if !(r > 0.0 && r <= params.a_threshold) {
            return Err(Error::Domain(format!("start must lie in (0, A], got {r}")));
        }
        let roots = spectrum.roots();
        let u = params.u_of(r);
        let mut ln_mag = Vec::with_capacity(roots.len());
        let mut sign = Vec::with_capacity(roots.len());
        for (root, &ln_norm) in roots.iter().zip(&spectrum.weights_density_norm) {
            let (lw, sw) = mode_w(params, *root, u)?;
            ln_mag.push(ln_norm + lw);
            sign.push(sw);
        }
        Ok(TransitionKernel { params: *params, roots, ln_mag, sign, r })
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<SeriesEval> {
        let p = &self.params;
        if !(t > 0.0) {
            return Err(Error::Domain(format!("transition density needs t > 0, got {t}")));
        }
        if !(x > 0.0 && x <= p.a_threshold) {
            return Err(Error::Domain(format!("x must lie in (0, A], got {x}")));
        }
        let mu2 = p.mu2();
        let ux = p.u_of(x);
        // e^{u_y/2 - u_x/2} W(u_x) W(u_y) with both W carried as e^{u/2} W.
        let pre = (mu2 / 2.0).ln() - ux + (1.0 - p.theta as f64) * (self.r / x).ln();
        let mut sum = 0.0;
        let mut comp = 0.0;
        let mut last = 0.0;
        let mut small = 0;
        let mut used = 0;
        for (k, root) in self.roots.iter().enumerate() {
            let (lw, sw) = mode_w(p, *root, ux)?;
            if sw == 0.0 || !lw.is_finite() {
                continue;
            }
            let term = self.sign[k] * sw * (pre + self.ln_mag[k] + lw - root.rate(p) * t).exp();
            let y = term - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
            last = term;
            used = k + 1;
            if term.abs() < TERM_STOP * sum.abs() {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        let last_ratio = if sum.is_finite() { last.abs() / sum.abs().max(1e-6) } else { f64::INFINITY };
        Ok(SeriesEval { value: sum.max(0.0), raw: sum, last_ratio, terms_used: used })
    }
}

/// Integral of f over [0, A] to absolute tolerance 1e-9, split at A/100.
pub fn integrate_state(params: &ModelParams, f: &mut dyn FnMut(f64) -> f64) -> Result<f64> {
    let a = params.a_threshold;
    quad::integrate(f, 0.0, a, &[a / 100.0], 1e-9)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    SurvivalPre,
    SurvivalPost,
    DensityPre,
    DensityPost,
    EmpiricalSurvival,
}

impl CurveKind {
    pub fn survival(theta: u8) -> Self {
        if theta == 0 {
            CurveKind::SurvivalPre
        } else {
            CurveKind::SurvivalPost
        }
    }

    pub fn density(theta: u8) -> Self {
        if theta == 0 {
            CurveKind::DensityPre
        } else {
            CurveKind::DensityPost
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveMeta {
    pub r: f64,
    pub n_modes: Option<usize>,
    pub t_star: Option<f64>,
    pub mc_paths: Option<u64>,
    /// Smallest grid t from which on every value converged.
    pub t_conv: Option<f64>,
    /// Most negative raw value before clamping, 0 if none.
    pub worst_undershoot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub preconv: Vec<bool>,
    pub kind: CurveKind,
    pub meta: CurveMeta,
}

/// Shortest round-trip decimal, with exponent notation far from 1.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

impl Curve {
    fn from_series(grid: &[f64], kind: CurveKind, r: f64, n_modes: usize, evals: Vec<SeriesEval>) -> Self {
        let mut worst: f64 = 0.0;
        let mut t_conv = None;
        for (t, e) in grid.iter().zip(&evals).rev() {
            if !e.converged() {
                break;
            }
            t_conv = Some(*t);
        }
        for e in &evals {
            if e.raw.is_finite() {
                worst = worst.min(e.raw);
            }
        }
        Curve {
            grid: grid.to_vec(),
            values: evals.iter().map(|e| e.value).collect(),
            preconv: evals.iter().map(|e| !e.converged()).collect(),
            kind,
            meta: CurveMeta { r, n_modes: Some(n_modes), t_star: None, mc_paths: None, t_conv, worst_undershoot: worst },
        }
    }

    pub fn survival(params: &ModelParams, spectrum: &Spectrum, r: f64, grid: &[f64]) -> Result<Self> {
        check_grid(grid)?;
        let s = SurvivalSeries::new(params, spectrum, r)?;
        let evals = grid.iter().map(|&t| s.survival(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_series(grid, CurveKind::survival(params.theta), r, spectrum.n_modes, evals))
    }

    pub fn density(params: &ModelParams, spectrum: &Spectrum, r: f64, grid: &[f64]) -> Result<Self> {
        check_grid(grid)?;
        let s = SurvivalSeries::new(params, spectrum, r)?;
        let evals = grid.iter().map(|&t| s.density(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_series(grid, CurveKind::density(params.theta), r, spectrum.n_modes, evals))
    }

    pub fn flag(&self, i: usize) -> &'static str {
        if self.preconv[i] {
            "preconv"
        } else {
            "ok"
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,flag\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!("{},{},{}\n", fmt_num(self.grid[i]), fmt_num(self.values[i]), self.flag(i)));
        }
        out
    }

    pub fn meta_json(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            kind: CurveKind,
            #[serde(flatten)]
            meta: &'a CurveMeta,
        }
        serde_json::to_string_pretty(&Sidecar { kind: self.kind, meta: &self.meta }).expect("finite metadata")
    }
}

/// Grids must be strictly increasing and nonnegative.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] >= 0.0) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}
