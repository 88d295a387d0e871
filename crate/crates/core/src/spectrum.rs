//! Eigenvalues of the killed generator on (0, A] and the per-mode constants
//! of the survival and transition-density series.
//!
//! The eigenvalues are `lambda = mu^2 (xi^2 - 1) / 8` where `xi = i beta`
//! solves `W_{1-theta, i beta/2}(2/(mu^2 A)) = 0`, plus possibly one real
//! `xi = alpha0` in [0, 1] solving `W_{1, alpha/2}(2/(mu^2 A)) = 0` when
//! `theta = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::{imaginary_phase, whittaker_w_db_scaled, whittaker_w_dz_scaled, whittaker_w_scaled, Scaled};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub a_threshold: f64,
    pub theta: u8,
}

impl ModelParams {
    pub fn new(mu: f64, a_threshold: f64, theta: u8) -> Result<Self> {
        let p = ModelParams { mu, a_threshold, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu != 0.0) {
            return Err(Error::InvalidParams(format!("mu must be finite and nonzero, got {}", self.mu)));
        }
        if !(self.a_threshold.is_finite() && self.a_threshold > 0.0) {
            return Err(Error::InvalidParams(format!("threshold must be positive, got {}", self.a_threshold)));
        }
        if self.theta > 1 {
            return Err(Error::InvalidParams(format!("theta must be 0 or 1, got {}", self.theta)));
        }
        Ok(())
    }

    pub fn mu2(&self) -> f64 {
        self.mu * self.mu
    }

    /// Whittaker argument at the threshold, 2/(mu^2 A).
    pub fn z_threshold(&self) -> f64 {
        2.0 / (self.mu2() * self.a_threshold)
    }

    /// Whittaker argument u = 2/(mu^2 x).
    pub fn u_of(&self, x: f64) -> f64 {
        2.0 / (self.mu2() * x)
    }

    /// First Whittaker index of the eigenfunctions, 1 - theta.
    pub fn first_index(&self) -> f64 {
        1.0 - self.theta as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Root {
    Alpha(f64),
    Beta(f64),
}

impl Root {
    fn second_index(self) -> Complex64 {
        match self {
            Root::Alpha(a) => Complex64::new(a / 2.0, 0.0),
            Root::Beta(b) => Complex64::new(0.0, b / 2.0),
        }
    }

    /// xi with lambda = mu^2 (xi^2 - 1)/8.
    fn xi(self) -> Complex64 {
        match self {
            Root::Alpha(a) => Complex64::new(a, 0.0),
            Root::Beta(b) => Complex64::new(0.0, b),
        }
    }

    /// Decay rate -lambda of the mode.
    pub fn rate(self, params: &ModelParams) -> f64 {
        match self {
            Root::Alpha(a) => params.mu2() * (1.0 - a * a) / 8.0,
            Root::Beta(b) => params.mu2() * (1.0 + b * b) / 8.0,
        }
    }
}

/// Both coefficient forms for one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeWeight {
    /// 4 xi / (1 - xi^2) divided by dW/db at the threshold; the coefficient of
    /// the simplified survival series.
    pub survival: f64,
    /// ln of the transition-density constant xi / (dW/db dW/dz) at the
    /// threshold, which overflows binary64 for large beta when stored plainly.
    pub density_norm_ln: f64,
    /// |Im| / |value| of the survival coefficient before taking its real part.
    pub imag_residue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub params: ModelParams,
    pub alpha0: Option<f64>,
    pub betas: Vec<f64>,
    /// Survival coefficients, the alpha0 mode first when present.
    pub weights_survival: Vec<f64>,
    /// ln of the density constants, same order as `weights_survival`.
    pub weights_density_norm: Vec<f64>,
    pub n_modes: usize,
    pub residual_max: f64,
}

#[derive(Serialize, Deserialize)]
struct SpectrumFile {
    mu: f64,
    #[serde(rename = "A")]
    a: f64,
    theta: u8,
    alpha0: Option<f64>,
    betas: Vec<f64>,
    weights_survival: Vec<f64>,
    weights_density_norm: Vec<f64>,
    n_modes: usize,
    residual_max: f64,
}

impl Spectrum {
    /// All roots in series order: alpha0 (if any) then the betas.
    pub fn roots(&self) -> Vec<Root> {
        let mut out = Vec::with_capacity(self.betas.len() + 1);
        if let Some(a) = self.alpha0 {
            out.push(Root::Alpha(a));
        }
        out.extend(self.betas.iter().map(|&b| Root::Beta(b)));
        out
    }

    /// Eigenvalues in series order.
    pub fn lambdas(&self) -> Vec<f64> {
        self.roots().iter().map(|r| -r.rate(&self.params)).collect()
    }

    /// Keeps the first `n` beta modes (and alpha0).
    pub fn truncated(&self, n: usize) -> Spectrum {
        let n = n.min(self.betas.len());
        let extra = self.alpha0.is_some() as usize;
        Spectrum {
            params: self.params,
            alpha0: self.alpha0,
            betas: self.betas[..n].to_vec(),
            weights_survival: self.weights_survival[..n + extra].to_vec(),
            weights_density_norm: self.weights_density_norm[..n + extra].to_vec(),
            n_modes: n,
            residual_max: self.residual_max,
        }
    }

    pub fn to_json(&self) -> String {
        let f = SpectrumFile {
            mu: self.params.mu,
            a: self.params.a_threshold,
            theta: self.params.theta,
            alpha0: self.alpha0,
            betas: self.betas.clone(),
            weights_survival: self.weights_survival.clone(),
            weights_density_norm: self.weights_density_norm.clone(),
            n_modes: self.n_modes,
            residual_max: self.residual_max,
        };
        serde_json::to_string_pretty(&f).expect("spectrum fields are finite")
    }

    pub fn from_json(s: &str) -> Result<Spectrum> {
        let f: SpectrumFile = serde_json::from_str(s).map_err(|e| Error::InvalidParams(e.to_string()))?;
        let params = ModelParams::new(f.mu, f.a, f.theta)?;
        let extra = f.alpha0.is_some() as usize;
        if f.betas.len() != f.n_modes || f.weights_survival.len() != f.n_modes + extra || f.weights_density_norm.len() != f.n_modes + extra
        {
            return Err(Error::InvalidParams("spectrum file lengths disagree".into()));
        }
        Ok(Spectrum {
            params,
            alpha0: f.alpha0,
            betas: f.betas,
            weights_survival: f.weights_survival,
            weights_density_norm: f.weights_density_norm,
            n_modes: f.n_modes,
            residual_max: f.residual_max,
        })
    }
}

fn char_scaled(params: &ModelParams, beta: f64) -> Result<Scaled> {
    whittaker_w_scaled(params.first_index(), Complex64::new(0.0, beta / 2.0), params.z_threshold())
}

/// W_{1-theta, i beta/2}(2/(mu^2 A)), real. Underflows to 0 for large beta;
/// the root finder works with the normalized form instead.
pub fn characteristic_fn(params: &ModelParams, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be nonnegative, got {beta}")));
    }
    Ok(char_scaled(params, beta)?.to_complex().re)
}

/// W_{1, alpha/2}(2/(mu^2 A)); only meaningful before the change.
pub fn characteristic_fn_real(params: &ModelParams, alpha: f64) -> Result<f64> {
    if params.theta != 0 {
        return Err(Error::Regime);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(whittaker_w_scaled(1.0, Complex64::new(alpha / 2.0, 0.0), params.z_threshold())?.to_complex().re)
}

/// The characteristic function divided by twice the modulus of one
/// connection term, i.e. cos of the phase. Same sign and roots, O(1) size.
fn char_normalized(params: &ModelParams, beta: f64) -> Result<(f64, f64)> {
    let (phase, _) = imaginary_phase(params.first_index(), beta / 2.0, params.z_threshold())?;
    Ok((phase.cos(), phase))
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Bisection down to width 1e-8, then three secant steps kept inside the
/// bracket.
fn polish(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Convergence(format!("bracket [{lo}, {hi}] has no sign change")));
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let (l0, h0) = (lo, hi);
    let mut x0 = lo;
    let mut x1 = hi;
    let mut f0 = flo;
    let mut f1 = f(hi)?;
    let mut best = if f0.abs() < f1.abs() { (x0, f0.abs()) } else { (x1, f1.abs()) };
    for _ in 0..3 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 >= l0 && x2 <= h0) || x2 == x1 {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1)?;
        // Near the noise floor a secant step can move away from the root.
        if f1.abs() < best.1 {
            best = (x1, f1.abs());
        }
        if f1 == 0.0 {
            break;
        }
    }
    Ok(best.0)
}

/// Number of sign changes of the real characteristic function on a uniform
/// grid of `n_points` over [0, 1].
pub fn count_alpha_sign_changes(params: &ModelParams, n_points: usize) -> Result<usize> {
    let mut count = 0;
    let mut prev = characteristic_fn_real(params, 0.0)?;
    for k in 1..n_points {
        let v = characteristic_fn_real(params, k as f64 / (n_points - 1) as f64)?;
        if v.signum() != prev.signum() && v != 0.0 && prev != 0.0 {
            count += 1;
        }
        prev = v;
    }
    Ok(count)
}

/// The root alpha0 in [0, 1], if the characteristic function changes sign
/// there on a 10^4-point scan.
pub fn find_alpha0(params: &ModelParams) -> Result<Option<f64>> {
    if params.theta != 0 {
        return Err(Error::Regime);
    }
    const N: usize = 10_000;
    let g = |a: f64| characteristic_fn_real(params, a);
    let mut prev_a = 0.0;
    let mut prev = g(0.0)?;
    for k in 1..=N {
        let a = k as f64 / N as f64;
        let v = g(a)?;
        if v == 0.0 {
            return Ok(Some(a));
        }
        if v.signum() != prev.signum() {
            return Ok(Some(polish(&g, prev_a, a)?));
        }
        prev_a = a;
        prev = v;
    }
    Ok(None)
}

/// The first `n_modes` positive roots beta of the characteristic function.
///
/// Brackets come from the phase of the connection form: the function is
/// 2|T| cos(phase), so every crossing of pi/2 + k pi is a root. Each bracket
/// is confirmed by a sign change of the characteristic function itself.
pub fn find_betas(params: &ModelParams, n_modes: usize) -> Result<Vec<f64>> {
    if n_modes == 0 {
        return Err(Error::InvalidParams("n_modes must be at least 1".into()));
    }
    let g = |b: f64| char_normalized(params, b).map(|(v, _)| v);
    let sign_of = |b: f64| -> Result<f64> { Ok(char_scaled(params, b)?.mant.re.signum()) };
    let mut roots = Vec::with_capacity(n_modes);
    let mut ceiling = 50.0;
    let mut b_prev = 1e-6;
    let (_, p0) = char_normalized(params, b_prev)?;
    let mut phase_prev = p0;
    let mut raw_prev = p0;
    let mut sign_prev = sign_of(b_prev)?;
    let mut step: f64 = 0.05;
    while roots.len() < n_modes {
        if b_prev >= ceiling {
            if ceiling >= 6400.0 {
                return Err(Error::BracketExhaustion { found: roots.len(), wanted: n_modes });
            }
            ceiling *= 2.0;
        }
        let b = b_prev + step;
        let (_, raw) = char_normalized(params, b)?;
        let dphi = wrap(raw - raw_prev);
        let phase = phase_prev + dphi;
        let spacing = PI * step / dphi.abs().max(1e-12);
        let crossings = (((phase - PI / 2.0) / PI).floor() - ((phase_prev - PI / 2.0) / PI).floor()).abs();
        let sign = sign_of(b)?;
        let changed = sign != sign_prev;
        // Two phase crossings in one step may hide a pair of roots.
        if (crossings >= 2.0 || spacing < 2.0 * step) && step > 1e-4 {
            step = (0.5 * spacing).min(0.5 * step).max(1e-4);
            continue;
        }
        // Where the threshold lies beyond the turning point the phase of a
        // single connection term carries no root information, so a crossing
        // without a sign change there is ignored.
        if changed {
            roots.push(polish(&g, b_prev, b)?);
        }
        b_prev = b;
        raw_prev = raw;
        phase_prev = phase;
        sign_prev = sign;
        step = 0.05f64.min(0.5 * spacing);
    }
    Ok(roots)
}

/// Coefficients of one mode; see [`ModeWeight`].
pub fn mode_weight(params: &ModelParams, root: Root) -> Result<ModeWeight> {
    let a = params.first_index();
    let z = params.z_threshold();
    let b = root.second_index();
    let xi = root.xi();
    if xi.norm() == 0.0 {
        // dW/db is zero there too (W is even in b); the numerator decides.
        return Ok(ModeWeight { survival: 0.0, density_norm_ln: f64::NEG_INFINITY, imag_residue: 0.0 });
    }
    let db = whittaker_w_db_scaled(a, b, z)?;
    if db.is_zero() {
        return Err(Error::Normalization(format!("dW/db vanishes at {root:?}")));
    }
    let num = 4.0 * xi / (1.0 - xi * xi);
    let c = Scaled::from_complex(num).div(&db);
    let cv = c.to_complex();
    if !(cv.re.is_finite() && cv.im.is_finite()) {
        return Err(Error::Normalization(format!("survival coefficient overflows at {root:?}")));
    }
    let imag_residue = if cv.norm() > 0.0 { cv.im.abs() / cv.norm() } else { 0.0 };
    let dz = whittaker_w_dz_scaled(a, b, z)?;
    let cn = Scaled::from_complex(xi).div(&db.mul(&dz));
    if !(cn.mant.re > 0.0) {
        return Err(Error::Normalization(format!("density constant is not positive at {root:?}")));
    }
    Ok(ModeWeight { survival: cv.re, density_norm_ln: cn.ln_abs(), imag_residue })
}

/// Roots and weights for one parameter set; `n_modes` beta modes.
pub fn build_spectrum(params: &ModelParams, n_modes: usize) -> Result<Spectrum> {
    params.validate()?;
    let alpha0 = if params.theta == 0 { find_alpha0(params)? } else { None };
    let betas = find_betas(params, n_modes)?;
    let mut spectrum = Spectrum {
        params: *params,
        alpha0,
        betas,
        weights_survival: Vec::new(),
        weights_density_norm: Vec::new(),
        n_modes,
        residual_max: 0.0,
    };
    for root in spectrum.roots() {
        let w = mode_weight(params, root)?;
        if w.imag_residue > 1e-9 {
            return Err(Error::Normalization(format!("coefficient not real at {root:?}: {}", w.imag_residue)));
        }
        spectrum.weights_survival.push(w.survival);
        spectrum.weights_density_norm.push(w.density_norm_ln);
    }
    let mut worst: f64 = 0.0;
    let mut lo = 0.0;
    for &b in &spectrum.betas {
        let hi = b + (b - lo);
        worst = worst.max(root_residual(params, b, lo, hi)?);
        lo = b;
    }
    spectrum.residual_max = worst;
    Ok(spectrum)
}

/// |W(beta)| relative to the largest |W| sampled on [lo, hi].
pub fn root_residual(params: &ModelParams, beta: f64, lo: f64, hi: f64) -> Result<f64> {
    let at = char_scaled(params, beta)?;
    let mut big = f64::NEG_INFINITY;
    for k in 0..=16 {
        let x = lo + (hi - lo) * k as f64 / 16.0;
        big = big.max(char_scaled(params, x.max(1e-6))?.ln_abs());
    }
    Ok((at.ln_abs() - big).exp())
}
