use gsr_core::distribution::*;
use gsr_core::montecarlo::{simulate_passage, SimConfig};
use gsr_core::spectrum::{build_spectrum, ModelParams, Spectrum};
use proptest::prelude::*;
use std::sync::OnceLock;

fn setups() -> &'static [(ModelParams, Spectrum); 2] {
    static S: OnceLock<[(ModelParams, Spectrum); 2]> = OnceLock::new();
    S.get_or_init(|| {
        [ModelParams::new(1.5, 20.0, 0).unwrap(), ModelParams::new(1.5, 20.0, 1).unwrap()].map(|p| {
            let s = build_spectrum(&p, 500).unwrap();
            (p, s)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn survival_is_a_probability(theta in 0usize..2, r in 0.0..20.0f64, t in 0.2..50.0f64) {
        let (p, s) = &setups()[theta];
        let v = SurvivalSeries::new(p, s, r).unwrap().survival(t).unwrap();
        prop_assert!(v.raw >= -1e-9 && v.raw <= 1.0 + 1e-9, "{}", v.raw);
        prop_assert!(v.value >= 0.0 && v.value <= 1.0);
    }

    #[test]
    fn survival_decreases(theta in 0usize..2, r in 0.0..19.0f64, dr in 0.0..1.0f64, t in 0.2..30.0f64, dt in 0.0..5.0f64) {
        let (p, s) = &setups()[theta];
        let a = SurvivalSeries::new(p, s, r).unwrap();
        let b = SurvivalSeries::new(p, s, r + dr).unwrap();
        let base = a.survival(t).unwrap().raw;
        prop_assert!(a.survival(t + dt).unwrap().raw <= base + 1e-9);
        prop_assert!(b.survival(t).unwrap().raw <= base + 1e-9);
    }

    #[test]
    fn density_nonnegative(theta in 0usize..2, r in 0.0..20.0f64, t in 0.2..50.0f64) {
        let (p, s) = &setups()[theta];
        prop_assert!(SurvivalSeries::new(p, s, r).unwrap().density(t).unwrap().raw >= -1e-9);
    }

    #[test]
    fn mu_sign_does_not_matter(theta in 0usize..2, r in 0.0..20.0f64, t in 0.2..20.0f64) {
        let (p, s) = &setups()[theta];
        let q = ModelParams::new(-p.mu, p.a_threshold, p.theta).unwrap();
        prop_assert_eq!(survival(p, s, r, t).unwrap(), survival(&q, s, r, t).unwrap());
    }

    #[test]
    fn synthetic_moment_is_term_integral(c in proptest::collection::vec((0.01..2.0f64, 0.05..5.0f64), 1..6), t_star in 1e-4..1.0f64) {
        let s = SurvivalSeries::from_terms(&c);
        let want: f64 = c.iter().map(|(k, l)| k / l * (-l * t_star).exp()).sum();
        let got = s.moment(t_star).unwrap().raw;
        prop_assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn first_step_crossing_time_is_on_the_lattice(theta in 0u8..2, seed in any::<u64>(), idx in 0u64..1000) {
        let cfg = SimConfig { params: ModelParams::new(2.0, 2.0, theta).unwrap(), r: 1.0, dt: 1e-3, n_paths: 1, t_max: 5.0, seed };
        let s = simulate_passage(&cfg, idx).unwrap();
        let k = s.stop_time / cfg.dt;
        prop_assert!(s.stop_time > 0.0 && s.stop_time <= cfg.t_max);
        if s.crossed {
            prop_assert!((k - k.round()).abs() < 1e-6);
        }
    }
}
