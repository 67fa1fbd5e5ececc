use pmlab::energy::{pm_energy, LatticeField};
use pmlab::interpolation::{chambolle_interpolation, collapse_intermediate, intermediate_indices, partition_indices, InterpolationThresholds};
use proptest::prelude::*;

const N: usize = 400;

/// Increments drawn from the three gradient classes and the jump class.
fn field() -> impl Strategy<Value = LatticeField<f64>> {
    let t = InterpolationThresholds::<f64>::for_springs(N).unwrap();
    let eps = 1.0 / N as f64;
    let (lo, hi) = (t.lower() * eps, t.upper() * eps);
    let inc = prop_oneof![
        4 => -lo..lo,
        1 => lo..hi,
        1 => hi..0.5,
        1 => -2.0f64..2.0,
    ];
    prop::collection::vec(inc, N).prop_map(|incs| {
        let mut v = vec![0.0];
        for d in incs {
            v.push(v.last().unwrap() + d);
        }
        LatticeField::new(v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collapse_is_idempotent(u in field()) {
        let t = InterpolationThresholds::for_springs(N).unwrap();
        let once = collapse_intermediate(&u, &t).unwrap();
        let twice = collapse_intermediate(&once, &t).unwrap();
        prop_assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn collapse_lowers_energy_and_moves_little(u in field()) {
        let t = InterpolationThresholds::for_springs(N).unwrap();
        let c = collapse_intermediate(&u, &t).unwrap();
        prop_assert!(pm_energy(&c) <= pm_energy(&u) * (1.0 + 1e-14));
        let count = intermediate_indices(&u, &t).len() as f64;
        prop_assert!(c.l1_distance(&u) <= count * t.c * (1.0 + 1e-12));
    }

    #[test]
    fn flat_and_steep_partition_the_springs(u in field()) {
        let t = InterpolationThresholds::for_springs(N).unwrap();
        let p = partition_indices(&u, &t).unwrap();
        let mut all: Vec<usize> = p.flat.iter().chain(&p.steep).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..N).collect::<Vec<_>>());
    }

    #[test]
    fn interpolation_stays_near_the_lattice_values(u in field()) {
        let t = InterpolationThresholds::for_springs(N).unwrap();
        let w = chambolle_interpolation(&u, &t).unwrap();
        let eps = 1.0 / N as f64;
        let s = u.scaling();
        let limit = s.threshold_elongation();
        // on each cell without a jump, w stays between the two nodal values,
        // so it is within one sub-threshold increment of u_i
        for i in 0..N {
            let d = (u.values()[i + 1] - u.values()[i]).abs();
            if d > limit {
                continue;
            }
            let x = (i as f64 + 0.5) * eps;
            prop_assert!((w.eval(x) - u.values()[i]).abs() <= limit * (1.0 + 1e-9));
        }
    }
}
