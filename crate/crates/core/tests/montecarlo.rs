use gsr_core::distribution::{add0, Curve};
use gsr_core::montecarlo::*;
use gsr_core::spectrum::{build_spectrum, ModelParams};
use gsr_core::Error;

fn cfg(mu: f64, a: f64, theta: u8, n_paths: u64, dt: f64, t_max: f64) -> SimConfig {
    SimConfig { params: ModelParams::new(mu, a, theta).unwrap(), r: 0.0, dt, n_paths, t_max, seed: 2024 }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn start_at_threshold_crosses_in_one_step() {
    let mut c = cfg(1.0, 5.0, 0, 10, 1e-3, 1.0);
    c.r = 5.0;
    let s = simulate_passage(&c, 3).unwrap();
    assert!(s.crossed);
    assert_eq!(s.stop_time, 1e-3);
    let (f, g) = simulate_coupled(&c, 3).unwrap();
    assert_eq!(f, s);
    assert_eq!(g.stop_time, 2e-3);
}

#[test]
fn config_validation() {
    let ok = cfg(1.0, 5.0, 1, 10, 1e-3, 1.0);
    assert!(ok.validate().is_ok());
    let mut c = ok;
    c.dt = 0.02;
    assert!(matches!(c.validate(), Err(Error::InvalidParams(_))));
    c = ok;
    c.r = 5.1;
    assert!(matches!(c.validate(), Err(Error::InvalidParams(_))));
    c = ok;
    c.n_paths = 0;
    assert!(matches!(c.validate(), Err(Error::InvalidParams(_))));
    c = ok;
    c.t_max = f64::INFINITY;
    assert!(matches!(c.validate(), Err(Error::InvalidParams(_))));
}

#[test]
fn same_seed_and_index_reproduce() {
    let c = cfg(1.5, 20.0, 1, 50, 1e-3, 30.0);
    for i in [0, 7, 49] {
        assert_eq!(simulate_passage(&c, i).unwrap(), simulate_passage(&c, i).unwrap());
    }
    let mut other = c;
    other.seed += 1;
    assert_ne!(simulate_passage(&c, 0).unwrap(), simulate_passage(&other, 0).unwrap());
    assert_ne!(simulate_passage(&c, 0).unwrap(), simulate_passage(&c, 1).unwrap());
}

#[test]
fn batch_matches_single_paths_and_thread_count() {
    let c = cfg(1.5, 20.0, 1, 200, 1e-3, 30.0);
    let all = simulate_all(&c).unwrap();
    for (i, pair) in all.iter().enumerate() {
        assert_eq!(pair.0, simulate_passage(&c, i as u64).unwrap());
        assert_eq!(*pair, simulate_coupled(&c, i as u64).unwrap());
    }
    let d0 = run_digest(&all);
    assert_eq!(d0, run_digest(&simulate_all(&c).unwrap()));
    for n in ["1", "3"] {
        std::env::set_var(THREADS_ENV, n);
        let d = run_digest(&simulate_all(&c).unwrap());
        std::env::remove_var(THREADS_ENV);
        assert_eq!(d, d0);
    }
}

#[test]
fn crossed_paths_stop_within_horizon() {
    let c = cfg(1.0, 10.0, 0, 300, 1e-3, 2.0);
    let all = simulate_all(&c).unwrap();
    assert!(all.iter().any(|s| !s.0.crossed));
    for (f, g) in &all {
        for s in [f, g] {
            assert!(s.stop_time > 0.0 && s.stop_time <= c.t_max);
            if !s.crossed {
                assert_eq!(s.stop_time, c.t_max);
            }
        }
    }
}

#[test]
fn state_stays_positive_at_small_steps() {
    for (mu, a, theta) in [(2.0, 100.0, 1), (2.0, 50.0, 0), (0.25, 20.0, 0), (1.5, 20.0, 1)] {
        let c = cfg(mu, a, theta, 200, 1e-3, 20.0);
        assert!(simulate_all(&c).is_ok());
    }
}

#[test]
fn huge_step_blows_up() {
    let mut c = cfg(2.0, 1e4, 1, 20, 1e10, 1e12);
    c.r = 5e3;
    let errs = (0..20).filter(|&i| matches!(simulate_passage(&c, i), Err(Error::NumericalBlowup { step: 1 }))).count();
    assert!(errs > 0);
}

#[test]
fn empirical_curve_shape() {
    let c = cfg(1.5, 20.0, 1, 2000, 1e-3, 40.0);
    let grid = linspace(0.05, 40.0, 60);
    let e = empirical_survival(&c, &grid).unwrap();
    assert!(e.curve.values[0] > 0.999);
    for w in e.curve.values.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for (p, se) in e.curve.values.iter().zip(&e.se) {
        assert!((se - (p * (1.0 - p) / 2000.0).sqrt()).abs() < 1e-15);
    }
    assert_eq!(e.curve.meta.mc_paths, Some(2000));
    assert!(matches!(empirical_survival(&c, &[0.0, 1.0]), Err(Error::InvalidParams(_))));
    assert!(matches!(empirical_survival(&c, &[1.0, 41.0]), Err(Error::InvalidParams(_))));
}

#[test]
fn censored_paths_count_as_surviving() {
    let c = cfg(1.0, 10.0, 0, 400, 1e-3, 1.0);
    let samples = simulate_all(&c).unwrap();
    let e = empirical_from_samples(&c, &samples, &[1.0]).unwrap();
    let alive = samples.iter().filter(|s| !s.0.crossed || s.0.stop_time >= 1.0).count();
    assert_eq!(e.curve.values[0], alive as f64 / 400.0);
    assert!(e.n_censored > 0);
}

fn curve_with(values: Vec<f64>, grid: &[f64]) -> Curve {
    let p = ModelParams::new(1.5, 20.0, 1).unwrap();
    let s = build_spectrum(&p, 20).unwrap();
    let mut c = Curve::survival(&p, &s, 0.0, grid).unwrap();
    c.values = values;
    c
}

#[test]
fn compare_identical_and_shifted() {
    let grid = linspace(0.5, 10.0, 20);
    let p = ModelParams::new(1.5, 20.0, 1).unwrap();
    let s = build_spectrum(&p, 500).unwrap();
    let a = Curve::survival(&p, &s, 0.0, &grid).unwrap();
    let same = compare_curves(&a, &exact_curve(&a), 1e-4).unwrap();
    assert_eq!(same.max_abs_dev, 0.0);
    assert_eq!(same.n_outside_3se, 0);
    assert!(same.passed());
    let shifted = curve_with(a.values.iter().map(|v| v + 0.1).collect(), &grid);
    let rep = compare_curves(&a, &exact_curve(&shifted), 1e-4).unwrap();
    assert!(!rep.passed());
    assert!((rep.max_abs_dev - 0.1).abs() < 1e-12);
    assert_eq!(rep.n_outside_3se, 20);
    let other = curve_with(a.values.clone(), &linspace(0.5, 10.0, 21));
    assert_eq!(compare_curves(&a, &exact_curve(&other), 1e-4), Err(Error::GridMismatch));
}

#[test]
fn compare_against_truncated_series() {
    let grid = linspace(1.0, 20.0, 20);
    for theta in [0, 1] {
        let p = ModelParams::new(1.5, 20.0, theta).unwrap();
        let s = build_spectrum(&p, 500).unwrap();
        let full = Curve::survival(&p, &s, 0.0, &grid).unwrap();
        let short = Curve::survival(&p, &s.truncated(50), 0.0, &grid).unwrap();
        let rep = compare_curves(&full, &exact_curve(&short), 1e-4).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
    }
}

#[test]
fn report_json_field_order() {
    let grid = linspace(0.5, 10.0, 20);
    let a = curve_with(vec![0.5; 20], &grid);
    let j = compare_curves(&a, &exact_curve(&a), 1e-4).unwrap().to_json();
    let keys = ["max_abs_dev", "n_outside_3se", "n_grid", "dt", "n_paths", "verdict"];
    let pos: Vec<usize> = keys.iter().map(|k| j.find(&format!("\"{k}\"")).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    let v: serde_json::Value = serde_json::from_str(&j).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["n_grid"], 20);
}

#[test]
fn halving_dt_reduces_survival_bias() {
    let p = ModelParams::new(1.5, 20.0, 1).unwrap();
    let s = build_spectrum(&p, 500).unwrap();
    let mean = add0(&p, 0.0).unwrap();
    let grid = linspace(0.1, 5.0 * mean, 20);
    let exact = Curve::survival(&p, &s, 0.0, &grid).unwrap();
    let mut bias = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let c = SimConfig { params: p, r: 0.0, dt, n_paths: 20_000, t_max: 10.0 * mean, seed: 99 };
        let e = empirical_survival(&c, &grid).unwrap();
        let b: f64 = e.curve.values.iter().zip(&exact.values).map(|(x, y)| x - y).sum::<f64>() / 20.0;
        bias.push(b);
    }
    assert!(bias[0] > 0.0, "{bias:?}");
    assert!(bias[0] > bias[1] && bias[1] > bias[2], "{bias:?}");
}

#[test]
fn pre_change_mean_is_headstart_complement() {
    let c = SimConfig { params: ModelParams::new(1.5, 20.0, 0).unwrap(), r: 0.0, dt: 1e-4, n_paths: 100_000, t_max: 200.0, seed: 11 };
    let e = empirical_survival(&c, &[1.0]).unwrap();
    let dev = (e.mean_stop_time - 20.0).abs();
    println!("mean {} se {} censored {}", e.mean_stop_time, e.mean_se, e.n_censored);
    assert!(dev <= 3.0 * e.mean_se, "mean {} se {}", e.mean_stop_time, e.mean_se);
}
