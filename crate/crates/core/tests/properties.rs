use hartree_lab::config::ExperimentConfig;
use hartree_lab::data::InitialData;
use hartree_lab::estimates::{fit_decay_exponent, verify_bound, BoundOptions};
use hartree_lab::grid::{Grid, GridSpec, NormSpec};
use hartree_lab::hartree::ModelParams;
use hartree_lab::inequalities::BandLimited;
use hartree_lab::quad::product_trapezoid_weights;
use hartree_lab::transforms::{free_propagate, pseudoconformal_invert};
use proptest::prelude::*;
use rand::SeedableRng;

fn power_series(p: f64, c: f64) -> Vec<(f64, f64)> {
    (0..200)
        .map(|i| {
            let t = 10f64.powf(-4.0 + 4.0 * i as f64 / 199.0);
            (t, c * t.powf(p))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_recovers_exact_power_laws(p in -2.0f64..2.0, c in 1e-3f64..1e3) {
        let fit = fit_decay_exponent(&power_series(p, c), (1e-3, 1e-1)).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
        prop_assert!((fit.intercept.exp() / c - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exact_power_law_has_unit_band(p in -1.5f64..1.5, c in 1e-2f64..1e2) {
        let r = verify_bound("q", "", "", &power_series(p, c), p, &BoundOptions::default()).unwrap();
        prop_assert!((r.band - 1.0).abs() < 1e-9);
        prop_assert!(r.pass);
    }

    #[test]
    fn holder_type_series_fit(c in 0.1f64..10.0) {
        let series: Vec<(f64, f64)> = (1..400).map(|i| {
            let h = 10f64.powf(-7.0 + 6.0 * i as f64 / 399.0);
            (h, c * h.powf(0.35))
        }).collect();
        let fit = fit_decay_exponent(&series, (1e-6, 1e-2)).unwrap();
        prop_assert!((fit.slope - 0.35).abs() < 1e-9);
    }

    #[test]
    fn free_flow_is_unitary(seed in 0u64..1000, t in 0.01f64..5.0, sigma in 0.0f64..2.0) {
        let g = Grid::new(GridSpec::new(2, 32, 20.0).unwrap()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = BandLimited::random(&mut rng, 2, 20.0, 2.0, false).sample(&g).unwrap();
        let spec = NormSpec::sobolev(sigma);
        let n0 = u.spectrum().norm(&spec);
        let n1 = free_propagate(&u, t).spectrum().norm(&spec);
        prop_assert!((n1 - n0).abs() <= 1e-12 * n0);
        let back = free_propagate(&free_propagate(&u, t), -t);
        prop_assert!(back.sub(&u).l2_norm() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn pseudoconformal_map_is_an_involution(
        width in 0.6f64..1.5,
        px in -1.0f64..1.0,
        chirp in -0.3f64..0.3,
    ) {
        let g = Grid::new(GridSpec::new(2, 64, 20.0).unwrap()).unwrap();
        let data = InitialData::Gaussian { a0: 0.5, width, center: vec![0.0, 0.0], momentum: vec![px, 0.0], chirp };
        let w = data.sample(&g, 0.95, 0).unwrap();
        let back = pseudoconformal_invert(&pseudoconformal_invert(&w).unwrap()).unwrap();
        prop_assert!(back.sub(&w).l2_norm() <= 1e-12 * w.l2_norm());
    }

    #[test]
    fn lambda_is_nonincreasing_and_capped(gamma in 0.34f64..0.49, frac in 0.01f64..0.99, a in -1.0f64..2.0, da in 0.0f64..1.0) {
        let lo = 2.0 - 2.5 * gamma;
        let rho = lo + frac * (1.0 - lo);
        let Ok(p) = ModelParams::new(gamma, 1.0, rho, 2) else { return Ok(()); };
        let e = p.exponents();
        prop_assert!(e.lambda(a + da) <= e.lambda(a) + 1e-15);
        prop_assert!(e.lambda(a) <= gamma);
        prop_assert!(e.lambda(1.0) < e.lambda(0.0));
        prop_assert!(p.integrability_exponent() > 0.0);
    }

    #[test]
    fn product_trapezoid_is_exact_on_linears(a in 0.001f64..1.0, len in 0.001f64..2.0, beta in -0.9f64..1.0, c0 in -2.0f64..2.0, c1 in -2.0f64..2.0) {
        let b = a + len;
        let (wl, wr) = product_trapezoid_weights(a, b, beta);
        let moment = |q: f64| (b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0);
        let exact = c0 * moment(beta) + c1 * moment(beta + 1.0);
        let approx = wl * (c0 + c1 * a) + wr * (c0 + c1 * b);
        prop_assert!((approx - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
    }

    #[test]
    fn config_roundtrips_through_toml(seed in any::<u64>(), points in prop::sample::select(vec![16usize, 32, 64, 128]), gamma in 0.34f64..0.49, nodes in 64usize..2048) {
        let mut c = ExperimentConfig::default();
        c.seed = seed;
        c.grid_spectral.points = points;
        c.hartree_core.gamma = gamma;
        c.asymptotics.nodes = nodes;
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}
