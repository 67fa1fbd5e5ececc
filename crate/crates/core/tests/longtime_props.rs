use pmlab::longtime::{limit_ode, scaled_scheme, PlateauConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectories_move_away_from_one_half(z0 in 0.05f64..0.95, k in 0usize..3) {
        let eps = [1e-3, 1e-4, 1e-6][k];
        let cfg = PlateauConfig::new(0.3, 0.7, z0, eps, 1e-5, 2e-3).unwrap();
        let s = scaled_scheme(&cfg).unwrap();
        let o = limit_ode(&cfg, 1e-6).unwrap();
        for z in [&s.z, &o.z] {
            if z0 < 0.5 {
                prop_assert!(z.windows(2).all(|w| w[1] <= w[0]));
            } else if z0 > 0.5 {
                prop_assert!(z.windows(2).all(|w| w[1] >= w[0]));
            }
        }
    }

    #[test]
    fn mirrored_start_gives_the_mirrored_run(d in 0.0f64..0.45) {
        let a = scaled_scheme(&PlateauConfig::new(0.3, 0.7, 0.5 - d, 1e-5, 1e-5, 1e-3).unwrap()).unwrap();
        let b = scaled_scheme(&PlateauConfig::new(0.3, 0.7, 0.5 + d, 1e-5, 1e-5, 1e-3).unwrap()).unwrap();
        for (x, y) in a.z.iter().zip(&b.z) {
            prop_assert!((x + y - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rescaling_time_reproduces_the_run(lambda in 0.01f64..2.0) {
        let mut a = PlateauConfig::new(0.3, 0.7, 0.4, 1e-4, 1e-5, 5e-4).unwrap();
        a.lambda = Some(lambda);
        let eta = a.eta();
        let b = PlateauConfig { tau: eta, horizon: eta * a.steps() as f64, lambda: Some(1.0), ..a.clone() };
        prop_assert_eq!(scaled_scheme(&a).unwrap().z, scaled_scheme(&b).unwrap().z);
    }
}
