//! Euler-Maruyama simulation of the GSR statistic up to its first passage
//! through A, for cross-checking the analytic survival curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::hash::{DefaultHasher, Hash, Hasher};

use crate::distribution::{check_grid, Curve, CurveKind, CurveMeta};
use crate::error::{Error, Result};
use crate::spectrum::ModelParams;

/// Thread cap for path simulation.
pub const THREADS_ENV: &str = "GSR_DIST_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub r: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub t_max: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.r >= 0.0 && self.r <= self.params.a_threshold) {
            return Err(Error::InvalidParams(format!("headstart must lie in [0, A], got {}", self.r)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParams(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_max / 100.0) {
            return Err(Error::InvalidParams(format!("dt must lie in (0, t_max/100], got {}", self.dt)));
        }
        if self.n_paths < 1 {
            return Err(Error::InvalidParams("n_paths must be at least 1".into()));
        }
        Ok(())
    }

    /// Default horizon: ten times the closed-form first moment.
    pub fn default_t_max(params: &ModelParams, r: f64) -> Result<f64> {
        let m = if params.theta == 0 { crate::distribution::arl(params, r)? } else { crate::distribution::add0(params, r)? };
        Ok(10.0 * m.max(1e-3))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PassageSample {
    /// Crossing time, or t_max when censored.
    pub stop_time: f64,
    pub crossed: bool,
}

fn rng_for(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

struct Walker {
    r: f64,
    a: f64,
    drift: f64,
    mu: f64,
    dt: f64,
    sq: f64,
    done: Option<PassageSample>,
}

impl Walker {
    fn new(cfg: &SimConfig, dt: f64) -> Self {
        let p = &cfg.params;
        Walker { r: cfg.r, a: p.a_threshold, drift: p.theta as f64 * p.mu2(), mu: p.mu, dt, sq: dt.sqrt(), done: None }
    }

    /// One step with standard normal increment z; `k` counts steps done.
    fn step(&mut self, z: f64, k: u64) -> Result<()> {
        let r = self.r;
        let next = r + (1.0 + self.drift * r) * self.dt + self.mu * r * self.sq * z;
        if !(next > 0.0) {
            return Err(Error::NumericalBlowup { step: k });
        }
        if next > 1e6 * self.a {
            return Err(Error::NumericalBlowup { step: k });
        }
        self.r = next;
        if next >= self.a {
            self.done = Some(PassageSample { stop_time: k as f64 * self.dt, crossed: true });
        }
        Ok(())
    }
}

fn start(cfg: &SimConfig, dt: f64) -> Walker {
    let mut w = Walker::new(cfg, dt);
    if cfg.r >= cfg.params.a_threshold {
        w.done = Some(PassageSample { stop_time: dt, crossed: true });
    }
    w
}

/// One path at step dt. Deterministic in (seed, path_index).
pub fn simulate_passage(cfg: &SimConfig, path_index: u64) -> Result<PassageSample> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, path_index);
    let mut w = start(cfg, cfg.dt);
    let n = (cfg.t_max / cfg.dt).floor() as u64;
    let mut k = 0;
    while w.done.is_none() && k < n {
        k += 1;
        let z: f64 = rng.sample(StandardNormal);
        w.step(z, k)?;
    }
    Ok(w.done.unwrap_or(PassageSample { stop_time: cfg.t_max, crossed: false }))
}

/// The path at step dt together with the path at step 2 dt driven by the
/// same Brownian increments.
pub fn simulate_coupled(cfg: &SimConfig, path_index: u64) -> Result<(PassageSample, PassageSample)> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, path_index);
    let mut fine = start(cfg, cfg.dt);
    let mut coarse = start(cfg, 2.0 * cfg.dt);
    let n = (cfg.t_max / cfg.dt).floor() as u64;
    let mut k = 0;
    let mut pending = 0.0;
    while (fine.done.is_none() || coarse.done.is_none()) && k < n {
        k += 1;
        let z: f64 = rng.sample(StandardNormal);
        if fine.done.is_none() {
            fine.step(z, k)?;
        }
        if k % 2 == 1 {
            pending = z;
        } else if coarse.done.is_none() {
            coarse.step((pending + z) / std::f64::consts::SQRT_2, k / 2)?;
        }
    }
    let censored = PassageSample { stop_time: cfg.t_max, crossed: false };
    Ok((fine.done.unwrap_or(censored), coarse.done.unwrap_or(censored)))
}

/// A pool sized by the thread cap variable, or rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| Error::InvalidParams(format!("{THREADS_ENV} must be a positive integer")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::InvalidParams(e.to_string()))
}

/// All coupled paths, in path order.
pub fn simulate_all(cfg: &SimConfig) -> Result<Vec<(PassageSample, PassageSample)>> {
    cfg.validate()?;
    thread_pool()?.install(|| (0..cfg.n_paths).into_par_iter().map(|i| simulate_coupled(cfg, i)).collect())
}

/// Hash of every fine and coarse stop time, for reproducibility checks.
pub fn run_digest(samples: &[(PassageSample, PassageSample)]) -> u64 {
    let mut h = DefaultHasher::new();
    for (f, c) in samples {
        f.stop_time.to_bits().hash(&mut h);
        f.crossed.hash(&mut h);
        c.stop_time.to_bits().hash(&mut h);
        c.crossed.hash(&mut h);
    }
    h.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCurve {
    pub curve: Curve,
    /// Binomial standard error per grid point.
    pub se: Vec<f64>,
    /// |S_dt - S_2dt| / (sqrt 2 - 1): the bias estimate of a scheme whose
    /// error shrinks like sqrt(dt).
    pub allowance: Vec<f64>,
    pub mean_stop_time: f64,
    pub mean_se: f64,
    pub n_censored: u64,
}

fn fraction_surviving(samples: &[PassageSample], t: f64) -> f64 {
    samples.iter().filter(|s| s.stop_time >= t).count() as f64 / samples.len() as f64
}

/// Empirical survival on `grid` from already simulated paths.
pub fn empirical_from_samples(cfg: &SimConfig, samples: &[(PassageSample, PassageSample)], grid: &[f64]) -> Result<EmpiricalCurve> {
    check_grid(grid)?;
    if !(grid[0] > 0.0) || *grid.last().unwrap() > cfg.t_max {
        return Err(Error::InvalidParams("grid must lie within (0, t_max]".into()));
    }
    let fine: Vec<PassageSample> = samples.iter().map(|s| s.0).collect();
    let coarse: Vec<PassageSample> = samples.iter().map(|s| s.1).collect();
    let n = fine.len() as f64;
    let mut values = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    let mut allowance = Vec::with_capacity(grid.len());
    for &t in grid {
        let p = fraction_surviving(&fine, t);
        let q = fraction_surviving(&coarse, t);
        values.push(p);
        se.push((p * (1.0 - p) / n).sqrt());
        allowance.push((p - q).abs() / (std::f64::consts::SQRT_2 - 1.0));
    }
    let times: Vec<f64> = fine.iter().map(|s| s.stop_time).collect();
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(EmpiricalCurve {
        curve: Curve {
            grid: grid.to_vec(),
            values,
            preconv: vec![false; grid.len()],
            kind: CurveKind::EmpiricalSurvival,
            meta: CurveMeta { r: cfg.r, n_modes: None, t_star: None, mc_paths: Some(cfg.n_paths), t_conv: None, worst_undershoot: 0.0 },
        },
        se,
        allowance,
        mean_stop_time: mean,
        mean_se: (var / n).sqrt(),
        n_censored: fine.iter().filter(|s| !s.crossed).count() as u64,
    })
}

pub fn empirical_survival(cfg: &SimConfig, grid: &[f64]) -> Result<EmpiricalCurve> {
    let samples = simulate_all(cfg)?;
    empirical_from_samples(cfg, &samples, grid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport {
    pub max_abs_dev: f64,
    /// Points where |analytic - empirical| exceeds 3 SE plus the
    /// discretization allowance.
    pub n_outside_3se: usize,
    pub n_grid: usize,
    pub dt: f64,
    pub n_paths: u64,
    pub verdict: String,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite report")
    }
}

/// Absolute slack on every band, for series noise when both curves are
/// analytic.
const BAND_FLOOR: f64 = 1e-9;

/// Pass when at least 90% of the grid points (18 of 20) fall inside their
/// band.
pub fn compare_curves(analytic: &Curve, empirical: &EmpiricalCurve, dt: f64) -> Result<McReport> {
    let e = &empirical.curve;
    if analytic.grid != e.grid {
        return Err(Error::GridMismatch);
    }
    let mut max_dev: f64 = 0.0;
    let mut outside = 0;
    for i in 0..e.grid.len() {
        let dev = (analytic.values[i] - e.values[i]).abs();
        max_dev = max_dev.max(dev);
        if dev > 3.0 * empirical.se[i] + empirical.allowance[i] + BAND_FLOOR {
            outside += 1;
        }
    }
    let n = e.grid.len();
    let pass = (n - outside) * 10 >= n * 9;
    Ok(McReport {
        max_abs_dev: max_dev,
        n_outside_3se: outside,
        n_grid: n,
        dt,
        n_paths: e.meta.mc_paths.unwrap_or(0),
        verdict: if pass { "pass" } else { "fail" }.into(),
    })
}

/// Wraps an analytic curve as an "empirical" one with zero bands.
pub fn exact_curve(curve: &Curve) -> EmpiricalCurve {
    let n = curve.grid.len();
    EmpiricalCurve {
        curve: curve.clone(),
        se: vec![0.0; n],
        allowance: vec![0.0; n],
        mean_stop_time: f64::NAN,
        mean_se: f64::NAN,
        n_censored: 0,
    }
}
