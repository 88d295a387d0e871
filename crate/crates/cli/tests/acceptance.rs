//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::Command;

use gsr_core::distribution::*;
use gsr_core::montecarlo::{compare_curves, empirical_survival, SimConfig};
use gsr_core::quad;
use gsr_core::specfun::*;
use gsr_core::spectrum::{build_spectrum, count_alpha_sign_changes, root_residual};
use gsr_core::{ModelParams, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = ComplexValue;

struct Outcome {
    pass: bool,
    detail: String,
}

fn params(mu: f64, a: f64, theta: u8) -> ModelParams {
    ModelParams::new(mu, a, theta).unwrap()
}

fn spectrum(p: &ModelParams) -> Spectrum {
    build_spectrum(p, 500).unwrap()
}

fn moment_identity(theta: u8) -> Outcome {
    let t_star = 1e-3;
    let mut failed = Vec::new();
    let mut worst_ok: f64 = 0.0;
    let mut cells = 0;
    for mu in [0.5, 1.5] {
        for a in [100.0, 1000.0] {
            let p = params(mu, a, theta);
            let s = spectrum(&p);
            for k in 0..4 {
                let r = a * k as f64 / 4.0;
                cells += 1;
                let closed = if theta == 0 { arl(&p, r).unwrap() } else { add0(&p, r).unwrap() };
                let recon = moment_from_survival(&p, &s, r, t_star).unwrap() + moment_bias(&p, &s, r, t_star).unwrap();
                let rel = (recon - closed).abs() / closed;
                if rel <= 0.005 {
                    worst_ok = worst_ok.max(rel);
                } else {
                    failed.push(format!("(mu {mu}, A {a}, r {r}) rel {rel:.3e}"));
                }
            }
        }
    }
    Outcome {
        pass: failed.is_empty(),
        detail: format!(
            "{}/{cells} cells within 0.5%, worst passing rel {worst_ok:.2e}; failing: [{}]",
            cells - failed.len(),
            failed.join("; ")
        ),
    }
}

fn monte_carlo() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for theta in [0, 1] {
        let p = params(1.5, 20.0, theta);
        let s = spectrum(&p);
        let mean = if theta == 0 { arl(&p, 0.0).unwrap() } else { add0(&p, 0.0).unwrap() };
        let grid: Vec<f64> = (0..20).map(|i| 0.1 + (5.0 * mean - 0.1) * i as f64 / 19.0).collect();
        let cfg = SimConfig { params: p, r: 0.0, dt: 1e-4, n_paths: 100_000, t_max: 10.0 * mean, seed: 20240 + theta as u64 };
        let analytic = Curve::survival(&p, &s, 0.0, &grid).unwrap();
        let emp = empirical_survival(&cfg, &grid).unwrap();
        let rep = compare_curves(&analytic, &emp, cfg.dt).unwrap();
        pass &= rep.passed();
        parts.push(format!(
            "theta {theta}: {}/20 inside, max dev {:.2e}, censored {}",
            20 - rep.n_outside_3se,
            rep.max_abs_dev,
            emp.n_censored
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn whittaker_m_dz(a: f64, b: C, z: f64) -> C {
    let p = 0.5 + b - a;
    let q = 1.0 + 2.0 * b;
    let pre = Scaled::exp(-z / 2.0 + (b + 0.5) * z.ln());
    let m1 = kummer_m_scaled(p + 1.0, q + 1.0, z).unwrap();
    let lead = whittaker_m_scaled(a, b, z).unwrap().scale_by(-0.5 + (b + 0.5) / z);
    lead.add(&pre.mul(&m1).scale_by(p / q)).to_complex()
}

fn special_functions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [0.0f64; 4];
    for _ in 0..500 {
        let a: f64 = rng.random_range(0.0..1.0);
        let b = if rng.random_bool(0.5) { C::new(rng.random_range(0.0..0.5), 0.0) } else { C::new(0.0, rng.random_range(0.01..5.0)) };
        let z: f64 = rng.random_range(0.01..20.0);
        let idx = WhittakerIndices::new(a, b).unwrap();
        let m = whittaker_m(idx, z).unwrap();
        let w = whittaker_w(idx, z).unwrap();
        let lhs = m * whittaker_w_dz(idx, z).unwrap() - w * whittaker_m_dz(a, b, z);
        let rhs = -gamma_complex(1.0 + 2.0 * b).unwrap() * rgamma_complex(b - a + 0.5);
        let scale = rhs.norm().max((m * whittaker_w_dz(idx, z).unwrap()).norm()).max((w * whittaker_m_dz(a, b, z)).norm());
        worst[0] = worst[0].max((lhs - rhs).norm() / scale);

        let zz = rng.random_range(0.01..60.0);
        let p = whittaker_w_scaled(a, b, zz).unwrap();
        let q = whittaker_w_scaled(a, -b, zz).unwrap();
        if p != q {
            worst[1] = worst[1].max((p.sub(&q).ln_abs() - p.ln_abs()).exp());
        }

        let wi = whittaker_w_scaled(rng.random_range(-1.0..1.0), C::new(0.0, rng.random_range(0.0..40.0)), rng.random_range(0.001..100.0))
            .unwrap();
        worst[2] = worst[2].max(wi.mant.im.abs() / wi.mant.norm());

        let zc = rng.random_range(0.01..50.0);
        let w0 = whittaker_w(WhittakerIndices::real(0.0, 0.5), zc).unwrap().re / (-zc / 2.0).exp() - 1.0;
        let m0 = whittaker_m(WhittakerIndices::real(0.0, 0.5), zc).unwrap().re / (2.0 * (zc / 2.0).sinh()) - 1.0;
        let k0 = kummer_m(C::new(1.0, 0.0), C::new(2.0, 0.0), zc).unwrap().re / (zc.exp_m1() / zc) - 1.0;
        worst[3] = worst[3].max(w0.abs()).max(m0.abs()).max(k0.abs());
    }
    let pass = worst[0] <= 1e-7 && worst[1] <= 1e-10 && worst[2] <= 1e-10 && worst[3] <= 1e-10;
    Outcome {
        pass,
        detail: format!(
            "Wronskian {:.1e}, b-symmetry {:.1e}, realness {:.1e}, closed forms {:.1e} over 500 random points",
            worst[0], worst[1], worst[2], worst[3]
        ),
    }
}

fn spectral_structure() -> Outcome {
    let mut ortho: f64 = 0.0;
    let mut resid: f64 = 0.0;
    let mut alpha_max = 0;
    for (mu, a, theta) in [(0.5, 100.0, 0), (1.5, 100.0, 1), (1.5, 20.0, 0)] {
        let p = params(mu, a, theta);
        let s = spectrum(&p);
        resid = resid.max(s.residual_max);
        let mut lo = 0.0;
        for &b in &s.betas {
            resid = resid.max(root_residual(&p, b, lo, b + (b - lo)).unwrap());
            lo = b;
        }
        for i in 0..10 {
            for j in i..10 {
                let v = integrate_state(&p, &mut |x| {
                    if x <= 0.0 {
                        return 0.0;
                    }
                    speed_measure(x, &p).unwrap() * eigenfunction(&p, &s, i, x).unwrap() * eigenfunction(&p, &s, j, x).unwrap()
                })
                .unwrap();
                ortho = ortho.max((v - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    for (mu, a) in [(0.5, 100.0), (1.5, 20.0), (0.25, 10000.0), (2.0, 10.0)] {
        for n in [101, 1001, 10_001, 100_001] {
            alpha_max = alpha_max.max(count_alpha_sign_changes(&params(mu, a, 0), n).unwrap());
        }
    }
    Outcome {
        pass: ortho <= 1e-6 && resid <= 1e-10 && alpha_max <= 1,
        detail: format!("orthonormality {ortho:.1e}, max root residual {resid:.1e}, most real roots at one resolution {alpha_max}"),
    }
}

fn distributional_sanity() -> Outcome {
    let mut bad = Vec::new();
    for (mu, a, theta, t0, t1) in [(1.5, 100.0, 1, 0.2, 10.0), (0.5, 100.0, 0, 0.5, 50.0), (1.5, 20.0, 0, 0.2, 20.0)] {
        let p = params(mu, a, theta);
        let sp = spectrum(&p);
        let ts: Vec<f64> = (0..50).map(|j| t0 + (t1 - t0) * j as f64 / 49.0).collect();
        let mut prev: Option<Vec<f64>> = None;
        for i in 0..50 {
            let r = a * i as f64 / 49.0;
            if survival(&p, &sp, r, 0.0).unwrap() != 1.0 {
                bad.push(format!("S({r}, 0) != 1"));
            }
            let s = SurvivalSeries::new(&p, &sp, r).unwrap();
            let row: Vec<f64> = ts.iter().map(|&t| s.survival(t).unwrap().raw).collect();
            if !row.windows(2).all(|w| w[1] <= w[0] + 1e-9) {
                bad.push(format!("({mu}, {a}, {theta}) not monotone in t at r {r}"));
            }
            if let Some(pr) = &prev {
                if !row.iter().zip(pr).all(|(x, y)| *x <= *y + 1e-9) {
                    bad.push(format!("({mu}, {a}, {theta}) not monotone in r at {r}"));
                }
            }
            for &t in &ts {
                if s.density(t).unwrap().raw < -1e-9 {
                    bad.push(format!("({mu}, {a}, {theta}) negative density at r {r}, t {t}"));
                }
            }
            prev = Some(row);
        }
        for &t in &ts {
            if survival(&p, &sp, a, t).unwrap() > 1e-6 {
                bad.push(format!("S(A, {t}) > 1e-6"));
            }
        }
        let s = SurvivalSeries::new(&p, &sp, 0.25 * a).unwrap();
        let q = quad::integrate(&mut |t| s.density(t).unwrap().raw, t0, t1, &[], 1e-10).unwrap();
        let drop = s.survival(t0).unwrap().raw - s.survival(t1).unwrap().raw;
        if (q - drop).abs() > 1e-7 {
            bad.push(format!("({mu}, {a}, {theta}) density quadrature off by {:.1e}", (q - drop).abs()));
        }
        let k = TransitionKernel::new(&p, &sp, 0.1 * a).unwrap();
        let m = integrate_state(&p, &mut |x| if x <= 0.0 { 0.0 } else { k.eval(x, 1.0).unwrap().raw }).unwrap();
        if (m - survival(&p, &sp, 0.1 * a, 1.0).unwrap()).abs() > 1e-6 {
            bad.push(format!("({mu}, {a}, {theta}) marginalization off"));
        }
        for (x, y, t) in [(0.1, 0.5, 1.0), (0.3, 0.8, 0.2), (0.05, 0.95, 3.0)] {
            let (x, y) = (x * a, y * a);
            let l = transition_density(&p, &sp, x, t, y).unwrap() / speed_measure(x, &p).unwrap();
            let r = transition_density(&p, &sp, y, t, x).unwrap() / speed_measure(y, &p).unwrap();
            if (l - r).abs() > 1e-8 * l.abs().max(r.abs()) {
                bad.push(format!("({mu}, {a}, {theta}) detailed balance off at ({x}, {y}, {t})"));
            }
        }
    }
    Outcome { pass: bad.is_empty(), detail: if bad.is_empty() { "3 parameter sets, 50x50 grids".into() } else { bad.join("; ") } }
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["spectrum", "--mu", "0.5", "--threshold", "100", "--theta", "0", "--modes", "200"],
        &[
            "survival",
            "--mu",
            "1.5",
            "--threshold",
            "100",
            "--theta",
            "1",
            "--headstart",
            "0:100:11",
            "--tgrid",
            "0:10:21",
            "--allow-preconv",
        ],
        &["moments", "--mu", "0.5", "--threshold", "100", "--theta", "1", "--headstart", "10:90:5", "--format", "json"],
        &["validate-mc", "--mu", "1.5", "--threshold", "20", "--theta", "1", "--paths", "1000", "--dt", "1e-3", "--seed", "3"],
    ];
    let mut bad = Vec::new();
    for args in runs {
        let outs: Vec<_> = ["1", "1", "2"]
            .iter()
            .map(|n| Command::new(env!("CARGO_BIN_EXE_gsr")).args(args).env("GSR_DIST_THREADS", n).output().unwrap())
            .collect();
        if outs[0].stdout.is_empty() || outs.iter().any(|o| o.stdout != outs[0].stdout || o.status != outs[0].status) {
            bad.push(args[0]);
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "4 commands byte-identical over 3 runs at 1 and 2 threads".into()
        } else {
            format!("differs: {}", bad.join(", "))
        },
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("moment identity, pre-change", || moment_identity(0)),
        ("moment identity, post-change", || moment_identity(1)),
        ("Monte-Carlo cross-validation", monte_carlo),
        ("special-function properties", special_functions),
        ("spectral structure", spectral_structure),
        ("distributional sanity", distributional_sanity),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "criterion {} [{}] {name}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
